/* tslint:disable */
/* eslint-disable */

export class Completion {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    coarse(): Uint8Array;
    /**
     * Flat `[qy, qx, sy, sx, ...]` pixel coordinates of each patch match.
     */
    links(): Uint32Array;
    output(): Uint8Array;
    readonly ssim_diffusion: number;
    readonly ssim_output: number;
}

export class Frame {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * RGBA bytes, ready for `ImageData`.
     */
    pixels(): Uint8Array;
    readonly height: number;
    readonly width: number;
}

export function inpaint(pixels: Uint8Array, width: number, height: number, hole_y: number, hole_x: number, hole_h: number, hole_w: number, scales: number, patch_size: number, matcher: string): Completion;

export function stylize(content: Uint8Array, width: number, height: number, style: Uint8Array, style_width: number, style_height: number, patch_size: number): Frame;

export function texture(kind: string, period: number, size: number): Frame;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_completion_free: (a: number, b: number) => void;
    readonly __wbg_frame_free: (a: number, b: number) => void;
    readonly completion_coarse: (a: number) => [number, number];
    readonly completion_links: (a: number) => [number, number];
    readonly completion_output: (a: number) => [number, number];
    readonly completion_ssim_diffusion: (a: number) => number;
    readonly completion_ssim_output: (a: number) => number;
    readonly frame_height: (a: number) => number;
    readonly frame_pixels: (a: number) => [number, number];
    readonly frame_width: (a: number) => number;
    readonly inpaint: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: number) => [number, number, number];
    readonly stylize: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
    readonly texture: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
