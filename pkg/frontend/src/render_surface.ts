import { runRenderer } from "./cli.js";
import { renderSurface } from "./figures.js";

runRenderer("render_surface", renderSurface);
