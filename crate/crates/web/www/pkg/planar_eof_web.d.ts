/* tslint:disable */
/* eslint-disable */

export class FlowDemo {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `[x, y, u, v, ...]` on an 8 px grid.
     */
    arrows(): Float32Array;
    /**
     * First patch as 8-bit gray, row-major.
     */
    gray(): Uint8Array;
    /**
     * Recovered camera displacement, metres and degrees.
     */
    readonly est_dx: number;
    readonly est_dy: number;
    readonly est_yaw_deg: number;
    readonly height: number;
    readonly mean_u: number;
    readonly mean_v: number;
    readonly valid_fraction: number;
    readonly width: number;
}

export class RansacDemo {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Least-squares fit over every pair: `[theta_deg, tx, ty]`.
     */
    plain(): Float64Array;
    /**
     * `[px, py, qx, qy, is_outlier, ...]`.
     */
    points(): Float64Array;
    /**
     * Consensus fit: `[theta_deg, tx, ty]`, NaN if no consensus.
     */
    robust(): Float64Array;
    readonly n_inliers: number;
}

/**
 * `[v0, e0, v1, e1, ...]` for `n` speeds evenly spaced up to `v_max`.
 */
export function blur_curve(budget: number, z: number, fov_deg: number, v_max: number, n: number): Float64Array;

/**
 * Renders a noise patch before and after moving the camera by
 * `(dx_mm, dy_mm)` and `yaw_deg`, then recovers the motion from dense flow.
 */
export function flow_demo(dx_mm: number, dy_mm: number, yaw_deg: number, seed: number): FlowDemo;

/**
 * Longest exposure in microseconds; `Infinity` when standing still and
 * `NaN` for impossible geometry.
 */
export function max_exposure_us(speed: number, budget: number, z: number, fov_deg: number): number;

/**
 * `n` points in a 200 px square moved by a known rigid motion, with
 * Gaussian noise and a fraction replaced by random vectors up to 50 px.
 */
export function ransac_demo(n: number, outlier_fraction: number, theta_deg: number, tx: number, ty: number, noise_px: number, seed: number): RansacDemo;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_flowdemo_free: (a: number, b: number) => void;
    readonly __wbg_ransacdemo_free: (a: number, b: number) => void;
    readonly blur_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly flow_demo: (a: number, b: number, c: number, d: number) => number;
    readonly flowdemo_arrows: (a: number) => [number, number];
    readonly flowdemo_est_dx: (a: number) => number;
    readonly flowdemo_est_dy: (a: number) => number;
    readonly flowdemo_est_yaw_deg: (a: number) => number;
    readonly flowdemo_gray: (a: number) => [number, number];
    readonly flowdemo_height: (a: number) => number;
    readonly flowdemo_mean_u: (a: number) => number;
    readonly flowdemo_mean_v: (a: number) => number;
    readonly flowdemo_valid_fraction: (a: number) => number;
    readonly flowdemo_width: (a: number) => number;
    readonly max_exposure_us: (a: number, b: number, c: number, d: number) => number;
    readonly ransac_demo: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => number;
    readonly ransacdemo_n_inliers: (a: number) => number;
    readonly ransacdemo_plain: (a: number) => [number, number];
    readonly ransacdemo_points: (a: number) => [number, number];
    readonly ransacdemo_robust: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
