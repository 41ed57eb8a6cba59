import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['tests/**/*.test.ts'],
    // DOM tests opt in with a per-file @vitest-environment jsdom pragma
    environment: 'node',
    testTimeout: 20000,
    hookTimeout: 20000,
  },
});
