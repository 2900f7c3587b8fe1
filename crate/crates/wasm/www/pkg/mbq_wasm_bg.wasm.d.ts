/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const coherenceDecay: (a: number, b: number, c: number) => [number, number, number, number];
export const currentVsFlux: (a: number, b: number, c: number) => [number, number, number, number];
export const readoutTransient: (a: number, b: number, c: number) => [number, number, number, number];
export const spectrumVsFlux: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
