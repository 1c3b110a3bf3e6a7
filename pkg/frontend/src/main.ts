import { CoverForgeClient } from "./api.js";
import { CoverForgeApp } from "./app.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
const app = new CoverForgeApp(root, new CoverForgeClient(""));
app.mount();
