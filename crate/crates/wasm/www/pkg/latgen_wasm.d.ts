/* tslint:disable */
/* eslint-disable */

/**
 * Raw and repaired versions of a noisy correlation matrix.
 */
export class RepairResult {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly eps1: number;
    readonly min_eigen_raw: number;
    readonly min_eigen_repaired: number;
    /**
     * Off-diagonal entries `i < j` before repair.
     */
    readonly raw: Float64Array;
    /**
     * The same entries after repair.
     */
    readonly repaired: Float64Array;
}

export function joint_prob_curve(p_u: number, p_v: number, n: number): Float64Array;

export function repair_demo(n: number, noise: number, eps2: number, seed: bigint): RepairResult;

export function simulate_pair(p_wet: number, spatial: number, persistence: number, days: number, seed: bigint): Uint8Array;

export function solve_corr(p_u: number, p_v: number, p_joint: number): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_repairresult_free: (a: number, b: number) => void;
    readonly joint_prob_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly repair_demo: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly repairresult_eps1: (a: number) => number;
    readonly repairresult_min_eigen_raw: (a: number) => number;
    readonly repairresult_min_eigen_repaired: (a: number) => number;
    readonly repairresult_raw: (a: number) => [number, number];
    readonly repairresult_repaired: (a: number) => [number, number];
    readonly simulate_pair: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly solve_corr: (a: number, b: number, c: number) => [number, number, number];
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
