/* tslint:disable */
/* eslint-disable */

/**
 * Samples a Liouville profile on `[x_min, x_max]`. `kind` is the tagged
 * JSON form, e.g. `{"kind":"ANNULAR","m":1.0}`.
 */
export function liouville_json(kind: string, x_min: number, x_max: number, n: number): string;

/**
 * Moser assembly for `k` pieces with outermost radius `e^{log_r_k}`.
 */
export function moser_json(lambda: number, eps: number, k: number, log_r_k: number): string;

/**
 * Solves for `k` interior zeros and returns the document without the raw
 * profile, plus `plot`: `(log r, u)` pairs thinned to at most `max_points`.
 */
export function solve_nodal_json(lambda: number, eps: number, k: number, rho_max: number, max_points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly liouville_json: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly moser_json: (a: number, b: number, c: number, d: number) => [number, number];
    readonly solve_nodal_json: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
