import { runRenderer } from "./cli.js";
import { renderDecay } from "./figures.js";

runRenderer("render_decay", renderDecay);
