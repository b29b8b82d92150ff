/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_curve_taus: () => [number, number];
export const demo_detect: (a: number, b: number, c: number, d: number) => [number, number];
export const demo_event_count: (a: number) => number;
export const demo_event_frame: (a: number, b: number) => [number, number];
export const demo_f1_curve: (a: number) => [number, number];
export const demo_frame_count: (a: number) => number;
export const demo_height: (a: number) => number;
export const demo_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const demo_preview: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_scenes: () => [number, number];
export const demo_scores: (a: number) => [number, number];
export const demo_solve_fraction: (a: number) => number;
export const demo_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_start: () => void;
