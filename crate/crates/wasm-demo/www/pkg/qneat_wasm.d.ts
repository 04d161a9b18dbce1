/* tslint:disable */
/* eslint-disable */

/**
 * Evolves circuits for MaxCut on a benchmark graph with the MaxCut preset.
 */
export function evolve_maxcut(name: string, seed: bigint, generations: number, population: number): string;

/**
 * Nodes, edges and optimal cut of a benchmark graph.
 */
export function graph_info(name: string): string;

/**
 * Depth-one QAOA expectation over `gamma in [0, pi)`, `beta in [0, pi/2)`.
 */
export function qaoa_landscape(name: string, steps: number): string;

/**
 * Gradient ascent on depth-`p` QAOA from the linear-ramp start.
 */
export function qaoa_train(name: string, p: number, learning_rate: number, epochs: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly evolve_maxcut: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number, number];
    readonly graph_info: (a: number, b: number) => [number, number, number, number];
    readonly qaoa_landscape: (a: number, b: number, c: number) => [number, number, number, number];
    readonly qaoa_train: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
