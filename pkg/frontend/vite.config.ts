import { defineConfig } from "vitest/config";

// /queue etc. proxy to a locally running review service during development
const apiPaths = ["/queue", "/adjudicate", "/filings", "/sections", "/images", "/assets", "/healthz"];

export default defineConfig({
  base: "./",
  server: {
    proxy: Object.fromEntries(apiPaths.map((p) => [p, "http://127.0.0.1:8800"])),
  },
  test: {
    environment: "node",
    include: ["test/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
