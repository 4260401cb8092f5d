/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_repairresult_free: (a: number, b: number) => void;
export const joint_prob_curve: (a: number, b: number, c: number) => [number, number, number, number];
export const repair_demo: (a: number, b: number, c: number, d: bigint) => [number, number, number];
export const repairresult_eps1: (a: number) => number;
export const repairresult_min_eigen_raw: (a: number) => number;
export const repairresult_min_eigen_repaired: (a: number) => number;
export const repairresult_raw: (a: number) => [number, number];
export const repairresult_repaired: (a: number) => [number, number];
export const simulate_pair: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
export const solve_corr: (a: number, b: number, c: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
