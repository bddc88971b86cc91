/** Browser bootstrap: the only state kept on the client is the auth token. */

import { ApiClient } from "./api.js";
import { ReviewApp } from "./app.js";

function requireValue(key: string, question: string): string {
  let value = window.localStorage.getItem(key);
  if (!value) {
    value = window.prompt(question) ?? "";
    if (key === "elboot.token" && value) window.localStorage.setItem(key, value);
  }
  return value;
}

function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const token = requireValue("elboot.token", "shared team token (empty if none)") || null;
  const annotator = window.prompt("annotator id") || "anonymous";
  const api = new ApiClient("", token);
  const app = new ReviewApp(root, api, { annotator });
  void app.start();
}

boot();
