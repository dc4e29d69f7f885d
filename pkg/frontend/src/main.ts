import { mount } from "./app.js";

// gateway address can be overridden with ?gateway=http://host:port
const params = new URLSearchParams(location.search);
const baseUrl = params.get("gateway") ?? "http://127.0.0.1:8000";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");
mount(root, { baseUrl });
