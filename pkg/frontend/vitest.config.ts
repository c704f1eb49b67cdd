import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // binding tests spawn the core CLI many times
    testTimeout: 300_000,
    hookTimeout: 60_000,
  },
});
