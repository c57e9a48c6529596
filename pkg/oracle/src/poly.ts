/**
 * Multivariate polynomials over Z/p with graded reverse lexicographic term
 * order, sized for ideals in up to ~20 variables.
 *
 * A monomial is an exponent array (one slot per variable); a polynomial is a
 * list of terms sorted descending by the order, with nonzero coefficients.
 */

import { addm, mulm, subm, invm, PRIME } from "./modular.js";

export type Monomial = number[];

export interface Term {
	coef: number;
	mon: Monomial;
}

export type Poly = Term[];

export function degree(mon: Monomial): number {
	let d = 0;
	for (const e of mon) d += e;
	return d;
}

/** Positive when a > b in graded reverse lexicographic order. */
export function compareGrevlex(a: Monomial, b: Monomial): number {
	const da = degree(a);
	const db = degree(b);
	if (da !== db) return da - db;
	for (let i = a.length - 1; i >= 0; i--) {
		const diff = (a[i] ?? 0) - (b[i] ?? 0);
		if (diff !== 0) return -diff;
	}
	return 0;
}

export function monEqual(a: Monomial, b: Monomial): boolean {
	for (let i = 0; i < a.length; i++) if (a[i] !== b[i]) return false;
	return true;
}

export function divides(a: Monomial, b: Monomial): boolean {
	for (let i = 0; i < a.length; i++) if (a[i] > b[i]) return false;
	return true;
}

export function monDiv(b: Monomial, a: Monomial): Monomial {
	const out = new Array(b.length);
	for (let i = 0; i < b.length; i++) out[i] = b[i] - a[i];
	return out;
}

export function monMul(a: Monomial, b: Monomial): Monomial {
	const out = new Array(a.length);
	for (let i = 0; i < a.length; i++) out[i] = a[i] + b[i];
	return out;
}

export function monLcm(a: Monomial, b: Monomial): Monomial {
	const out = new Array(a.length);
	for (let i = 0; i < a.length; i++) out[i] = Math.max(a[i], b[i]);
	return out;
}

export function monKey(m: Monomial): string {
	return m.join(",");
}

/** Normalize an unsorted term list: sort descending, merge, drop zeros. */
export function canonical(terms: Term[]): Poly {
	terms.sort((s, t) => compareGrevlex(t.mon, s.mon));
	const out: Term[] = [];
	for (const t of terms) {
		if (t.coef === 0) continue;
		const last = out[out.length - 1];
		if (last !== undefined && monEqual(last.mon, t.mon)) {
			last.coef = addm(last.coef, t.coef);
			if (last.coef === 0) out.pop();
		} else {
			out.push({ coef: t.coef, mon: t.mon.slice() });
		}
	}
	return out;
}

export function leadingTerm(f: Poly): Term {
	return f[0];
}

export function scale(f: Poly, c: number): Poly {
	return f.map((t) => ({ coef: mulm(t.coef, c), mon: t.mon }));
}

export function monic(f: Poly): Poly {
	if (f.length === 0) return f;
	return scale(f, invm(f[0].coef));
}

/** f - c * x^shift * g, merged in one pass (the reduction workhorse). */
export function subShifted(f: Poly, c: number, shift: Monomial, g: Poly): Poly {
	const out: Term[] = [];
	let i = 0;
	let j = 0;
	while (i < f.length || j < g.length) {
		let gm: Monomial | null = null;
		if (j < g.length) gm = monMul(g[j].mon, shift);
		if (i < f.length && (gm === null || compareGrevlex(f[i].mon, gm) > 0)) {
			out.push(f[i]);
			i++;
		} else if (gm !== null && (i >= f.length || compareGrevlex(f[i].mon, gm) < 0)) {
			const coef = subm(0, mulm(c, g[j].coef));
			if (coef !== 0) out.push({ coef, mon: gm });
			j++;
		} else if (gm !== null) {
			const coef = subm(f[i].coef, mulm(c, g[j].coef));
			if (coef !== 0) out.push({ coef, mon: gm });
			i++;
			j++;
		}
	}
	return out;
}

/** Remainder of f on division by the basis (leading-term reduction only). */
export function normalForm(f: Poly, basis: Poly[]): Poly {
	let cur = f;
	const tail: Term[] = [];
	outer: while (cur.length > 0) {
		const lt = cur[0];
		for (const g of basis) {
			if (divides(g[0].mon, lt.mon)) {
				const c = mulm(lt.coef, invm(g[0].coef));
				cur = subShifted(cur, c, monDiv(lt.mon, g[0].mon), g);
				continue outer;
			}
		}
		tail.push(lt);
		cur = cur.slice(1);
	}
	return tail;
}

export function sPoly(f: Poly, g: Poly): Poly {
	const lcm = monLcm(f[0].mon, g[0].mon);
	const shiftF = monDiv(lcm, f[0].mon);
	const fm = scale(f, invm(f[0].coef)).map((t) => ({
		coef: t.coef,
		mon: monMul(t.mon, shiftF),
	}));
	// monomial orders are multiplication-compatible, so fm stays sorted
	return subShifted(fm, 1, monDiv(lcm, g[0].mon), scale(g, invm(g[0].coef)));
}

export function polyToString(f: Poly, names: string[]): string {
	if (f.length === 0) return "0";
	return f
		.map((t) => {
			const vars = t.mon
				.map((e, i) => (e === 0 ? "" : e === 1 ? names[i] : `${names[i]}^${e}`))
				.filter(Boolean)
				.join("*");
			return vars ? `${t.coef}*${vars}` : `${t.coef}`;
		})
		.join(" + ");
}

export { PRIME };
