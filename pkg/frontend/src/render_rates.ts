import { runRenderer } from "./cli.js";
import { renderRates } from "./figures.js";

runRenderer("render_rates", renderRates);
