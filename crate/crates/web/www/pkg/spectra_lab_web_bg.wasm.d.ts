/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const diagnose_replica: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number];
export const instrument_source: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const replica_program: () => [number, number];
export const replica_truth: () => [number, number];
export const simulate_replica: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
