/* tslint:disable */
/* eslint-disable */

/**
 * |coherence| between the parity blocks during read-out.
 */
export function coherenceDecay(lambda0: number, t_max: number, points: number): string;

/**
 * Block-resolved steady-state current through dot 2 versus flux.
 */
export function currentVsFlux(lambda0: number, temperature: number, points: number): string;

/**
 * Read-out current after the box is prepared in its block ground state.
 */
export function readoutTransient(lambda0: number, t_max: number, points: number): string;

/**
 * Energy levels of both parity blocks versus flux, full and effective model.
 */
export function spectrumVsFlux(lambda0: number, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly coherenceDecay: (a: number, b: number, c: number) => [number, number, number, number];
    readonly currentVsFlux: (a: number, b: number, c: number) => [number, number, number, number];
    readonly readoutTransient: (a: number, b: number, c: number) => [number, number, number, number];
    readonly spectrumVsFlux: (a: number, b: number) => [number, number, number, number];
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
