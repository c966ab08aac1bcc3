/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_fusionscene_free: (a: number, b: number) => void;
export const fusionscene_fuse: (a: number, b: number, c: number, d: number, e: number) => number;
export const fusionscene_fused_image: (a: number) => [number, number];
export const fusionscene_new: (a: number, b: number, c: number) => number;
export const fusionscene_prediction_image: (a: number, b: number) => [number, number];
export const fusionscene_ratios: (a: number) => [number, number];
export const fusionscene_report: (a: number) => [number, number];
export const fusionscene_scores: (a: number) => [number, number];
export const opening_view: (a: number, b: number, c: number) => [number, number];
export const sigma_trace: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
