/**
 * Buchberger's algorithm over Z/p with the Gebauer-Moeller pair criteria,
 * plus quotient-ring inspection for zero-dimensional ideals: dimension test
 * and standard-monomial counting (= number of complex solutions counted
 * with multiplicity).
 */

import {
	Monomial,
	Poly,
	canonical,
	compareGrevlex,
	degree,
	divides,
	monDiv,
	monEqual,
	monKey,
	monLcm,
	monMul,
	monic,
	normalForm,
	sPoly,
} from "./poly.js";

interface Pair {
	i: number;
	j: number;
	lcm: Monomial;
	deg: number;
}

function coprime(a: Monomial, b: Monomial): boolean {
	for (let k = 0; k < a.length; k++) if (a[k] > 0 && b[k] > 0) return false;
	return true;
}

export interface GroebnerOptions {
	/** Abort when exceeded (wall-clock ms). */
	timeoutMs?: number;
	/** Abort when the working basis grows past this many polynomials. */
	maxBasis?: number;
}

export class GroebnerTimeout extends Error {}

/** Minimal Groebner basis of the ideal generated by `gens` (grevlex). */
export function groebnerBasis(gens: Poly[], opts: GroebnerOptions = {}): Poly[] {
	const deadline = opts.timeoutMs === undefined ? Infinity : Date.now() + opts.timeoutMs;
	const maxBasis = opts.maxBasis ?? 4000;
	const basis: Poly[] = [];
	let pairs: Pair[] = [];

	const addGenerator = (f: Poly) => {
		const g = monic(canonical(f.map((t) => ({ coef: t.coef, mon: t.mon.slice() }))));
		if (g.length === 0) return;
		update(g);
	};

	// Gebauer-Moeller update of the pair set on arrival of h
	const update = (h: Poly) => {
		const t = basis.length;
		const lh = h[0].mon;
		const fresh: Pair[] = [];
		for (let i = 0; i < t; i++) {
			fresh.push({ i, j: t, lcm: monLcm(basis[i][0].mon, lh), deg: 0 });
		}
		for (const p of fresh) p.deg = degree(p.lcm);
		// criterion M: drop pairs whose lcm is a proper multiple of another new lcm
		let kept = fresh.filter(
			(p) =>
				!fresh.some(
					(q) =>
						q !== p &&
						divides(q.lcm, p.lcm) &&
						!monEqual(q.lcm, p.lcm),
				),
		);
		// criterion F: among equal lcms keep one
		const seen = new Map<string, Pair>();
		for (const p of kept) {
			const key = monKey(p.lcm);
			if (!seen.has(key)) seen.set(key, p);
		}
		kept = [...seen.values()];
		// criterion B (Buchberger 1): drop pairs with coprime leading monomials
		kept = kept.filter((p) => !coprime(basis[p.i][0].mon, lh));
		// prune old pairs made redundant by h
		pairs = pairs.filter((p) => {
			if (!divides(lh, p.lcm)) return true;
			const l1 = monLcm(basis[p.i][0].mon, lh);
			const l2 = monLcm(basis[p.j][0].mon, lh);
			return monEqual(l1, p.lcm) || monEqual(l2, p.lcm);
		});
		pairs.push(...kept);
		basis.push(h);
	};

	for (const f of gens) addGenerator(f);

	while (pairs.length > 0) {
		if (Date.now() > deadline) throw new GroebnerTimeout("groebner timeout");
		if (basis.length > maxBasis) throw new GroebnerTimeout("basis size cap exceeded");
		// normal selection: smallest lcm degree first, then grevlex-smallest
		let best = 0;
		for (let k = 1; k < pairs.length; k++) {
			const a = pairs[k];
			const b = pairs[best];
			if (a.deg < b.deg || (a.deg === b.deg && compareGrevlex(a.lcm, b.lcm) < 0)) {
				best = k;
			}
		}
		const pair = pairs.splice(best, 1)[0];
		const s = sPoly(basis[pair.i], basis[pair.j]);
		const r = normalForm(s, basis);
		if (r.length > 0) update(monic(r));
	}

	// minimalize: drop members whose leading monomial is divisible by another's
	const minimal: Poly[] = [];
	for (let i = 0; i < basis.length; i++) {
		const lt = basis[i][0].mon;
		let redundant = false;
		for (let j = 0; j < basis.length; j++) {
			if (i === j) continue;
			const lj = basis[j][0].mon;
			if (divides(lj, lt) && (!monEqual(lj, lt) || j < i)) {
				redundant = true;
				break;
			}
		}
		if (!redundant) minimal.push(basis[i]);
	}
	return minimal;
}

/** Leading monomials of a basis. */
export function leadingMonomials(basis: Poly[]): Monomial[] {
	return basis.map((f) => f[0].mon);
}

/**
 * Zero-dimensionality test: every variable carries a pure power among the
 * leading monomials.  Assumes a Groebner basis.
 */
export function isZeroDimensional(basis: Poly[], nvars: number): boolean {
	if (basis.some((f) => f.length === 1 && degree(f[0].mon) === 0)) return true; // ideal = (1)
	for (let v = 0; v < nvars; v++) {
		let found = false;
		for (const f of basis) {
			const m = f[0].mon;
			if (m[v] > 0 && degree(m) === m[v]) {
				found = true;
				break;
			}
		}
		if (!found) return false;
	}
	return true;
}

/**
 * Number of standard monomials (monomials outside the leading-term ideal);
 * equals the complex solution count with multiplicity for zero-dimensional
 * ideals.  DFS bounded by the pure-power caps per variable.
 */
export function countStandardMonomials(basis: Poly[], nvars: number, cap = 1_000_000): number {
	const lts = leadingMonomials(basis);
	if (lts.some((m) => degree(m) === 0)) return 0;
	const bound: number[] = new Array(nvars).fill(Infinity);
	for (const m of lts) {
		for (let v = 0; v < nvars; v++) {
			if (m[v] > 0 && degree(m) === m[v]) bound[v] = Math.min(bound[v], m[v]);
		}
	}
	if (bound.some((b) => !isFinite(b))) throw new Error("ideal is not zero-dimensional");
	let count = 0;
	const expo: number[] = new Array(nvars).fill(0);

	const dividesAny = (): boolean => {
		outer: for (const m of lts) {
			for (let v = 0; v < nvars; v++) {
				if (m[v] > expo[v]) continue outer;
			}
			return true;
		}
		return false;
	};

	const walk = (v: number): void => {
		if (count > cap) throw new Error("standard monomial cap exceeded");
		if (v === nvars) {
			count++;
			return;
		}
		for (let e = 0; e < bound[v]; e++) {
			expo[v] = e;
			if (dividesAny()) break; // larger e keeps it divisible
			walk(v + 1);
		}
		expo[v] = 0;
	};

	walk(0);
	return count;
}
