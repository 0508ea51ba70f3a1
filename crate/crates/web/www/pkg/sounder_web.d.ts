/* tslint:disable */
/* eslint-disable */

/**
 * Beam pointings of the four-face array and the sweep duration.
 */
export class BeamGridView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly az_deg: Float64Array;
    readonly beamwidth_az_deg: Float64Array;
    readonly beamwidth_el_deg: Float64Array;
    readonly el_deg: Float64Array;
    readonly face: Uint8Array;
    readonly peak_gain_dbi: number;
    readonly sweep_ms: number;
}

/**
 * Thresholded omni PDP of a LOS link plus one reflector.
 */
export class PdpView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly delays_ns: Float64Array;
    readonly fspl_db: number;
    readonly peaks: Uint32Array;
    /**
     * Absent taps are NaN.
     */
    readonly power_dbm: Float64Array;
    readonly threshold_dbm: number;
    readonly total_dbm: number;
}

export function beamGrid(f_ghz: number, guard_us: number): BeamGridView;

export function maxPathLossDb(f_ghz: number, g_rx_dbi: number, snr_min_db: number): number;

export function simulatePdp(f_ghz: number, distance_m: number, reflector_delay_ns: number, reflector_loss_db: number, seed: number): PdpView;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_beamgridview_free: (a: number, b: number) => void;
    readonly __wbg_pdpview_free: (a: number, b: number) => void;
    readonly beamGrid: (a: number, b: number) => [number, number, number];
    readonly beamgridview_az_deg: (a: number) => [number, number];
    readonly beamgridview_beamwidth_az_deg: (a: number) => [number, number];
    readonly beamgridview_beamwidth_el_deg: (a: number) => [number, number];
    readonly beamgridview_el_deg: (a: number) => [number, number];
    readonly beamgridview_face: (a: number) => [number, number];
    readonly beamgridview_peak_gain_dbi: (a: number) => number;
    readonly beamgridview_sweep_ms: (a: number) => number;
    readonly maxPathLossDb: (a: number, b: number, c: number) => [number, number, number];
    readonly pdpview_delays_ns: (a: number) => [number, number];
    readonly pdpview_fspl_db: (a: number) => number;
    readonly pdpview_peaks: (a: number) => [number, number];
    readonly pdpview_power_dbm: (a: number) => [number, number];
    readonly pdpview_threshold_dbm: (a: number) => number;
    readonly pdpview_total_dbm: (a: number) => number;
    readonly simulatePdp: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
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
