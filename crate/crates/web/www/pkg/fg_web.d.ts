/* tslint:disable */
/* eslint-disable */

export class FusionScene {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Fuses with the given parameters; returns false and keeps the
     * previous result if they are rejected.
     */
    fuse(k1: number, k2: number, threshold: number, element_size: number): boolean;
    /**
     * Fused map against truth: white hit, red false alarm, blue miss.
     */
    fused_image(): Uint8Array;
    /**
     * `count` noisy predictions plus one all-black one.
     */
    constructor(seed: number, count: number, speckle: number);
    /**
     * Prediction `index` as grayscale.
     */
    prediction_image(index: number): Uint8Array;
    ratios(): Float64Array;
    /**
     * JSON fusion report of the last [`FusionScene::fuse`] call.
     */
    report(): string;
    /**
     * `[accuracy, f1, iou]` of the last fused map against the truth.
     */
    scores(): Float64Array;
}

/**
 * A random mask with blobs and isolated specks: gray pixels survive an
 * opening with a `size`×`size` square, red ones are removed.
 */
export function opening_view(seed: number, speck_density: number, size: number): Uint8Array;

/**
 * JSON trace of two-stage clipping: `{stage1: {mean, std, removed}, stage2:
 * {...}, retained}` or `{error}`.
 */
export function sigma_trace(ratios: Float64Array, k1: number, k2: number, sample_std: boolean): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_fusionscene_free: (a: number, b: number) => void;
    readonly fusionscene_fuse: (a: number, b: number, c: number, d: number, e: number) => number;
    readonly fusionscene_fused_image: (a: number) => [number, number];
    readonly fusionscene_new: (a: number, b: number, c: number) => number;
    readonly fusionscene_prediction_image: (a: number, b: number) => [number, number];
    readonly fusionscene_ratios: (a: number) => [number, number];
    readonly fusionscene_report: (a: number) => [number, number];
    readonly fusionscene_scores: (a: number) => [number, number];
    readonly opening_view: (a: number, b: number, c: number) => [number, number];
    readonly sigma_trace: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
