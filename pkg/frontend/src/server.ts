import { buildApp } from "./app.js";
import { Store } from "./store.js";

const token = process.env.ANNOT_TOKEN;
if (!token) {
  console.error("set ANNOT_TOKEN to the shared annotator token");
  process.exit(2);
}
const port = Number(process.env.PORT ?? 8787);
const app = buildApp(new Store(), { token, videoDir: process.env.VIDEO_DIR });
app.listen(port, () => {
  console.log(`annotation ui listening on :${port}`);
});
