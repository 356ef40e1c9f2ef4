/* tslint:disable */
/* eslint-disable */

/**
 * Global corrector of the node nearest to `(x, y)` and its relative tail
 * outside `omega_{j,k}` for `k = 1, 2, ...`.
 */
export class Decay {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly field: Field;
    /**
     * Tail ratio for `k = 1..=tails.len()`.
     */
    readonly tails: Float64Array;
    /**
     * Fitted reduction per layer; `NaN` when fewer than two tails are nonzero.
     */
    readonly theta: number;
}

/**
 * Vertex values on the fine grid plus a short description.
 */
export class Field {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Coarse DOF the field belongs to.
     */
    readonly node: number;
    /**
     * Fine cells per side.
     */
    readonly subdivisions: number;
    readonly summary: string;
    readonly values: Float64Array;
}

export function basisFunction(coarse_level: number, fine_level: number, layers: number, epsilon: number, x: number, y: number): Field;

export function correctorDecay(coarse_level: number, fine_level: number, epsilon: number, x: number, y: number): Decay;

export function solve(coarse_level: number, fine_level: number, layers: number, epsilon: number, linear: boolean): Field;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_decay_free: (a: number, b: number) => void;
    readonly __wbg_field_free: (a: number, b: number) => void;
    readonly basisFunction: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly correctorDecay: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly decay_field: (a: number) => number;
    readonly decay_tails: (a: number) => [number, number];
    readonly decay_theta: (a: number) => number;
    readonly field_node: (a: number) => number;
    readonly field_subdivisions: (a: number) => number;
    readonly field_summary: (a: number) => [number, number];
    readonly field_values: (a: number) => [number, number];
    readonly solve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
