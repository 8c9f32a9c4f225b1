/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_completion_free: (a: number, b: number) => void;
export const __wbg_frame_free: (a: number, b: number) => void;
export const completion_coarse: (a: number) => [number, number];
export const completion_links: (a: number) => [number, number];
export const completion_output: (a: number) => [number, number];
export const completion_ssim_diffusion: (a: number) => number;
export const completion_ssim_output: (a: number) => number;
export const frame_height: (a: number) => number;
export const frame_pixels: (a: number) => [number, number];
export const frame_width: (a: number) => number;
export const inpaint: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: number) => [number, number, number];
export const stylize: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
export const texture: (a: number, b: number, c: number, d: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
