/* tslint:disable */
/* eslint-disable */

/**
 * Spec JSON of a built-in fixture.
 */
export function fixture_spec(name: string, l: number, g: number): string;

/**
 * Full Levinson report on the default grid.
 */
export function levinson_report(spec: string): string;

/**
 * Forward phase, reflection probability and smooth density on a geometric grid.
 */
export function phase_curve(spec: string, k_min: number, k_max: number, n_k: number): string;

/**
 * Direct-channel wavefunction on `|x| ≤ half_width`, thinned to at most
 * `max_points` samples, with the box density at that half-width.
 */
export function wavefunction(spec: string, k: number, half_width: number, max_points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly fixture_spec: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly levinson_report: (a: number, b: number) => [number, number, number, number];
    readonly phase_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly wavefunction: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
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
