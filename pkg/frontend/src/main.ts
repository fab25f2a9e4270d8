import { mountChat } from "./app.js";

const base = new URLSearchParams(window.location.search).get("api") ?? "";
void mountChat(document.getElementById("app")!, base);
