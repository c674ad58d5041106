/* tslint:disable */
/* eslint-disable */

/**
 * Max-min assignment of a hand-written reward matrix (`values[threat][group]`,
 * groups in enumeration order).
 */
export function assign(interceptors: number, values_json: string): string;

/**
 * Best capturing engagement of one group against one threat over horizons
 * `lo..=hi` (steps, stride `step`). Returns the reward, the chosen horizon
 * and the x/y track of every agent.
 */
export function engage(scenario_json: string, threat: number, members: Uint32Array, lo: number, hi: number, step: number): string;

/**
 * Group labels in column order, for building the matrix editor.
 */
export function group_labels(interceptors: number): string[];

/**
 * Samples a scenario with the default template.
 */
export function sample_scenario(seed: bigint, interceptors: number, threats: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly assign: (a: number, b: number, c: number) => [number, number, number, number];
    readonly engage: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly group_labels: (a: number) => [number, number, number, number];
    readonly sample_scenario: (a: bigint, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
