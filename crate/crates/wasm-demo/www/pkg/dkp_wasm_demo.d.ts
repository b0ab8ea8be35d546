/* tslint:disable */
/* eslint-disable */

/**
 * The sampled identity suite at one `tau`, as a JSON array of reports.
 */
export function identity_suite(tau_im: number, samples: number, seed: number): string;

/**
 * Integrate a two-point reduction on a 5x5 grid and return the node values
 * together with the compatibility and path-independence residuals.
 */
export function integrate_pair(xi1: number, xi2: number, v1: number, v2: number): string;

/**
 * `theta_1..theta_4` at `u = re + i im` for `tau = i tau_im`, as JSON.
 */
export function theta_values(tau_im: number, re: number, im: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly identity_suite: (a: number, b: number, c: number) => [number, number, number, number];
    readonly integrate_pair: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly theta_values: (a: number, b: number, c: number) => [number, number, number, number];
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
