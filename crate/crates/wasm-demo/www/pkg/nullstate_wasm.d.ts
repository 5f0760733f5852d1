/* tslint:disable */
/* eslint-disable */

export function exponent_table(kappa: number, smax: number): Float64Array;

export function green_profile(kappa: number, h: number, rho: number, eps: number, eta: number, points: number): Float64Array;

export function kernel_curve(alpha: number, beta: number, rho: number, t: number, points: number): Float64Array;

export function leg_weight_at(s: number, kappa: number): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly exponent_table: (a: number, b: number) => [number, number, number, number];
    readonly green_profile: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly kernel_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly leg_weight_at: (a: number, b: number) => [number, number, number];
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
