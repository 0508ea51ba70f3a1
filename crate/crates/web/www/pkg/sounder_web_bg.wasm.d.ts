/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_beamgridview_free: (a: number, b: number) => void;
export const __wbg_pdpview_free: (a: number, b: number) => void;
export const beamGrid: (a: number, b: number) => [number, number, number];
export const beamgridview_az_deg: (a: number) => [number, number];
export const beamgridview_beamwidth_az_deg: (a: number) => [number, number];
export const beamgridview_beamwidth_el_deg: (a: number) => [number, number];
export const beamgridview_el_deg: (a: number) => [number, number];
export const beamgridview_face: (a: number) => [number, number];
export const beamgridview_peak_gain_dbi: (a: number) => number;
export const beamgridview_sweep_ms: (a: number) => number;
export const maxPathLossDb: (a: number, b: number, c: number) => [number, number, number];
export const pdpview_delays_ns: (a: number) => [number, number];
export const pdpview_fspl_db: (a: number) => number;
export const pdpview_peaks: (a: number) => [number, number];
export const pdpview_power_dbm: (a: number) => [number, number];
export const pdpview_threshold_dbm: (a: number) => number;
export const pdpview_total_dbm: (a: number) => number;
export const simulatePdp: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
