import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    globalSetup: ["tests/setup/global.ts"],
    testTimeout: 240_000,
    hookTimeout: 120_000,
    // Parity tests share one live service; keep files sequential.
    fileParallelism: false,
  },
});
