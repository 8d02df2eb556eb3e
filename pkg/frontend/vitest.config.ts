import { defineConfig } from 'vitest/config';

export default defineConfig({
    test: {
        environment: 'jsdom',
        include: ['tests/**/*.test.ts'],
        // The moderation loop test drives a real server subprocess.
        testTimeout: 120_000,
        hookTimeout: 120_000,
    },
});
