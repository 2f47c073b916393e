import { runRenderer } from "./cli.js";
import { renderPerturbation } from "./figures.js";

runRenderer("render_perturbation", renderPerturbation);
