import { PipelineClient } from "./client.js";
import { renderApp } from "./render.js";

document.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (root) {
    renderApp(root, new PipelineClient());
  }
});
