/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_decay_free: (a: number, b: number) => void;
export const __wbg_field_free: (a: number, b: number) => void;
export const basisFunction: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const correctorDecay: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const decay_field: (a: number) => number;
export const decay_tails: (a: number) => [number, number];
export const decay_theta: (a: number) => number;
export const field_node: (a: number) => number;
export const field_subdivisions: (a: number) => number;
export const field_summary: (a: number) => [number, number];
export const field_values: (a: number) => [number, number];
export const solve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
