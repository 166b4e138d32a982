/* @ts-self-types="./planar_eof_web.d.ts" */

export class FlowDemo {
    static __wrap(ptr) {
        const obj = Object.create(FlowDemo.prototype);
        obj.__wbg_ptr = ptr;
        FlowDemoFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        FlowDemoFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_flowdemo_free(ptr, 0);
    }
    /**
     * `[x, y, u, v, ...]` on an 8 px grid.
     * @returns {Float32Array}
     */
    arrows() {
        const ret = wasm.flowdemo_arrows(this.__wbg_ptr);
        var v1 = getArrayF32FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 4, 4);
        return v1;
    }
    /**
     * Recovered camera displacement, metres and degrees.
     * @returns {number}
     */
    get est_dx() {
        const ret = wasm.flowdemo_est_dx(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get est_dy() {
        const ret = wasm.flowdemo_est_dy(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get est_yaw_deg() {
        const ret = wasm.flowdemo_est_yaw_deg(this.__wbg_ptr);
        return ret;
    }
    /**
     * First patch as 8-bit gray, row-major.
     * @returns {Uint8Array}
     */
    gray() {
        const ret = wasm.flowdemo_gray(this.__wbg_ptr);
        var v1 = getArrayU8FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 1, 1);
        return v1;
    }
    /**
     * @returns {number}
     */
    get height() {
        const ret = wasm.flowdemo_height(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get mean_u() {
        const ret = wasm.flowdemo_mean_u(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get mean_v() {
        const ret = wasm.flowdemo_mean_v(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get valid_fraction() {
        const ret = wasm.flowdemo_valid_fraction(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get width() {
        const ret = wasm.flowdemo_width(this.__wbg_ptr);
        return ret >>> 0;
    }
}
if (Symbol.dispose) FlowDemo.prototype[Symbol.dispose] = FlowDemo.prototype.free;

export class RansacDemo {
    static __wrap(ptr) {
        const obj = Object.create(RansacDemo.prototype);
        obj.__wbg_ptr = ptr;
        RansacDemoFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        RansacDemoFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_ransacdemo_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get n_inliers() {
        const ret = wasm.ransacdemo_n_inliers(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * Least-squares fit over every pair: `[theta_deg, tx, ty]`.
     * @returns {Float64Array}
     */
    plain() {
        const ret = wasm.ransacdemo_plain(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * `[px, py, qx, qy, is_outlier, ...]`.
     * @returns {Float64Array}
     */
    points() {
        const ret = wasm.ransacdemo_points(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * Consensus fit: `[theta_deg, tx, ty]`, NaN if no consensus.
     * @returns {Float64Array}
     */
    robust() {
        const ret = wasm.ransacdemo_robust(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
}
if (Symbol.dispose) RansacDemo.prototype[Symbol.dispose] = RansacDemo.prototype.free;

/**
 * `[v0, e0, v1, e1, ...]` for `n` speeds evenly spaced up to `v_max`.
 * @param {number} budget
 * @param {number} z
 * @param {number} fov_deg
 * @param {number} v_max
 * @param {number} n
 * @returns {Float64Array}
 */
export function blur_curve(budget, z, fov_deg, v_max, n) {
    const ret = wasm.blur_curve(budget, z, fov_deg, v_max, n);
    var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
    wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
    return v1;
}

/**
 * Renders a noise patch before and after moving the camera by
 * `(dx_mm, dy_mm)` and `yaw_deg`, then recovers the motion from dense flow.
 * @param {number} dx_mm
 * @param {number} dy_mm
 * @param {number} yaw_deg
 * @param {number} seed
 * @returns {FlowDemo}
 */
export function flow_demo(dx_mm, dy_mm, yaw_deg, seed) {
    const ret = wasm.flow_demo(dx_mm, dy_mm, yaw_deg, seed);
    return FlowDemo.__wrap(ret);
}

/**
 * Longest exposure in microseconds; `Infinity` when standing still and
 * `NaN` for impossible geometry.
 * @param {number} speed
 * @param {number} budget
 * @param {number} z
 * @param {number} fov_deg
 * @returns {number}
 */
export function max_exposure_us(speed, budget, z, fov_deg) {
    const ret = wasm.max_exposure_us(speed, budget, z, fov_deg);
    return ret;
}

/**
 * `n` points in a 200 px square moved by a known rigid motion, with
 * Gaussian noise and a fraction replaced by random vectors up to 50 px.
 * @param {number} n
 * @param {number} outlier_fraction
 * @param {number} theta_deg
 * @param {number} tx
 * @param {number} ty
 * @param {number} noise_px
 * @param {number} seed
 * @returns {RansacDemo}
 */
export function ransac_demo(n, outlier_fraction, theta_deg, tx, ty, noise_px, seed) {
    const ret = wasm.ransac_demo(n, outlier_fraction, theta_deg, tx, ty, noise_px, seed);
    return RansacDemo.__wrap(ret);
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg___wbindgen_throw_344f42d3211c4765: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./planar_eof_web_bg.js": import0,
    };
}

const FlowDemoFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_flowdemo_free(ptr, 1));
const RansacDemoFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_ransacdemo_free(ptr, 1));

function getArrayF32FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat32ArrayMemory0().subarray(ptr / 4, ptr / 4 + len);
}

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

function getArrayU8FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getUint8ArrayMemory0().subarray(ptr / 1, ptr / 1 + len);
}

let cachedFloat32ArrayMemory0 = null;
function getFloat32ArrayMemory0() {
    if (cachedFloat32ArrayMemory0 === null || cachedFloat32ArrayMemory0.byteLength === 0) {
        cachedFloat32ArrayMemory0 = new Float32Array(wasm.memory.buffer);
    }
    return cachedFloat32ArrayMemory0;
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat32ArrayMemory0 = null;
    cachedFloat64ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = module.ok && expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('planar_eof_web_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
