/**
 * Observed real solution classes of the off-diagonal system, by multistart
 * Levenberg-Marquardt on the residuals (L L^T - target)_{u<v}, deduplicated
 * modulo column sign flips.  A sampling observation (lower bound on the
 * true count), reported per draw.
 */

import { FactorGraph } from "./graph.js";

function solveSymmetric(a: number[][], b: number[]): number[] | null {
	const n = b.length;
	const m = a.map((row, i) => [...row, b[i]]);
	for (let col = 0; col < n; col++) {
		let piv = col;
		for (let r = col + 1; r < n; r++) {
			if (Math.abs(m[r][col]) > Math.abs(m[piv][col])) piv = r;
		}
		if (Math.abs(m[piv][col]) < 1e-300) return null;
		[m[col], m[piv]] = [m[piv], m[col]];
		for (let r = col + 1; r < n; r++) {
			const f = m[r][col] / m[col][col];
			if (f === 0) continue;
			for (let c = col; c <= n; c++) m[r][c] -= f * m[col][c];
		}
	}
	const x = new Array(n).fill(0);
	for (let r = n - 1; r >= 0; r--) {
		let s = m[r][n];
		for (let c = r + 1; c < n; c++) s -= m[r][c] * x[c];
		x[r] = s / m[r][r];
	}
	return x;
}

interface System {
	pairs: [number, number][]; // observed pairs with common parents
	pairVars: number[][]; // per pair: [varU, varV, varU, varV, ...]
	target: number[];
}

function buildSystem(graph: FactorGraph, lambda0: number[]): System {
	const varOf = new Map<string, number>();
	graph.edges.forEach(([h, v], idx) => varOf.set(`${h},${v}`, idx));
	const p = graph.observed.length;
	const pairs: [number, number][] = [];
	const pairVars: number[][] = [];
	const target: number[] = [];
	for (let u = 0; u < p; u++) {
		for (let v = u + 1; v < p; v++) {
			const vars: number[] = [];
			let value = 0;
			for (let h = 0; h < graph.latent.length; h++) {
				const a = varOf.get(`${h},${u}`);
				const b = varOf.get(`${h},${v}`);
				if (a !== undefined && b !== undefined) {
					vars.push(a, b);
					value += lambda0[a] * lambda0[b];
				}
			}
			if (vars.length > 0) {
				pairs.push([u, v]);
				pairVars.push(vars);
				target.push(value);
			}
		}
	}
	return { pairs, pairVars, target };
}

function residuals(sys: System, x: number[]): number[] {
	return sys.pairVars.map((vars, k) => {
		let s = -sys.target[k];
		for (let i = 0; i < vars.length; i += 2) s += x[vars[i]] * x[vars[i + 1]];
		return s;
	});
}

function levenberg(sys: System, x0: number[], nvars: number): number[] | null {
	let x = x0.slice();
	let lambda = 1e-3;
	let r = residuals(sys, x);
	let cost = r.reduce((s, v) => s + v * v, 0);
	for (let iter = 0; iter < 120; iter++) {
		// J^T J and J^T r assembled from the sparse bilinear structure
		const jtj: number[][] = Array.from({ length: nvars }, () => new Array(nvars).fill(0));
		const jtr = new Array(nvars).fill(0);
		sys.pairVars.forEach((vars, k) => {
			const grads = new Map<number, number>();
			for (let i = 0; i < vars.length; i += 2) {
				const a = vars[i];
				const b = vars[i + 1];
				grads.set(a, (grads.get(a) ?? 0) + x[b]);
				grads.set(b, (grads.get(b) ?? 0) + x[a]);
			}
			const entries = [...grads.entries()];
			for (const [i, gi] of entries) {
				jtr[i] += gi * r[k];
				for (const [j, gj] of entries) jtj[i][j] += gi * gj;
			}
		});
		let improved = false;
		for (let attempt = 0; attempt < 8; attempt++) {
			const damped = jtj.map((row, i) =>
				row.map((v, j) => (i === j ? v + lambda * (1 + v) : v)),
			);
			const step = solveSymmetric(damped, jtr);
			if (step) {
				const cand = x.map((v, i) => v - step[i]);
				const rc = residuals(sys, cand);
				const cc = rc.reduce((s, v) => s + v * v, 0);
				if (cc < cost) {
					x = cand;
					r = rc;
					cost = cc;
					lambda = Math.max(lambda / 3, 1e-12);
					improved = true;
					break;
				}
			}
			lambda *= 10;
			if (lambda > 1e12) break;
		}
		if (cost < 1e-22) break;
		if (!improved) break;
	}
	const scale = Math.max(1, ...sys.target.map(Math.abs));
	return Math.sqrt(cost) < 1e-9 * scale ? x : null;
}

/** Canonical representative modulo column sign flips, as a rounded key. */
function signClassKey(graph: FactorGraph, x: number[]): string {
	const parts: string[] = [];
	for (let h = 0; h < graph.latent.length; h++) {
		const idx: number[] = [];
		graph.edges.forEach(([hh], e) => {
			if (hh === h) idx.push(e);
		});
		if (idx.length === 0) continue;
		let flip = 1;
		for (const e of idx) {
			if (Math.abs(x[e]) > 1e-7) {
				flip = x[e] < 0 ? -1 : 1;
				break;
			}
		}
		for (const e of idx) parts.push((flip * x[e]).toFixed(5));
	}
	return parts.join("|");
}

export function countRealClasses(
	graph: FactorGraph,
	lambda0: number[],
	starts: number,
	seed: number,
): number {
	const sys = buildSystem(graph, lambda0);
	const nvars = graph.edges.length;
	let s = (seed >>> 0) || 1;
	const next = () => {
		s ^= s << 13;
		s >>>= 0;
		s ^= s >> 17;
		s ^= s << 5;
		s >>>= 0;
		return s / 2 ** 32;
	};
	const classes = new Set<string>();
	// the known solution is a class; seed with it to anchor the count
	classes.add(signClassKey(graph, lambda0));
	for (let t = 0; t < starts; t++) {
		const x0 = Array.from({ length: nvars }, () => (next() * 2 - 1) * 2.0);
		const sol = levenberg(sys, x0, nvars);
		if (sol) classes.add(signClassKey(graph, sol));
	}
	return classes.size;
}
