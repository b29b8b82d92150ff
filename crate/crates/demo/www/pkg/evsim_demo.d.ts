/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Tolerances of [`Demo::f1_curve`].
     */
    static curve_taus(): Float64Array;
    /**
     * Runs `method` on the noisy frames and scores it against the clean-frame
     * oracle at the same contrast.
     */
    detect(method: string, contrast: number): void;
    event_count(): number;
    /**
     * RGBA image of the events in frame interval `k` of the last run.
     */
    event_frame(k: number): Uint8Array;
    /**
     * F1 of the last run at each tolerance of [`Demo::curve_taus`].
     */
    f1_curve(): Float64Array;
    frame_count(): number;
    height(): number;
    /**
     * Generates a scene and its noisy copy.
     */
    constructor(scene: string, width: number, height: number, frames: number, spp: number, seed: number);
    /**
     * Grayscale RGBA preview of frame `k`'s log brightness. `view` is
     * `clean`, `noisy` or `denoised`; all three share the clean frame's range.
     */
    preview(k: number, view: string): Uint8Array;
    /**
     * Names accepted by the constructor.
     */
    static scenes(): string[];
    /**
     * `[precision, recall, f1, chamfer]` of the last run at the default tolerance.
     */
    scores(): Float64Array;
    solve_fraction(): number;
    width(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_curve_taus: () => [number, number];
    readonly demo_detect: (a: number, b: number, c: number, d: number) => [number, number];
    readonly demo_event_count: (a: number) => number;
    readonly demo_event_frame: (a: number, b: number) => [number, number];
    readonly demo_f1_curve: (a: number) => [number, number];
    readonly demo_frame_count: (a: number) => number;
    readonly demo_height: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly demo_preview: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_scenes: () => [number, number];
    readonly demo_scores: (a: number) => [number, number];
    readonly demo_solve_fraction: (a: number) => number;
    readonly demo_width: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
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
