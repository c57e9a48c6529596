/**
 * Degree of sign-identifiability via Groebner bases.
 *
 * For a random rational loading matrix L0 supported on the graph, the ideal
 * generated by the off-diagonal entries of L L^T - L0 L0^T is examined over
 * a prime field: positive fiber dimension means the graph is not
 * sign-identifiable; a zero-dimensional fiber is counted (standard
 * monomials = complex solutions with multiplicity) and divided by the order
 * of the column sign group.  Degree one certifies identifiability; a finite
 * degree of two or more is resolved by observing real solution classes.
 */

import { FactorGraph } from "./graph.js";
import {
	GroebnerTimeout,
	countStandardMonomials,
	groebnerBasis,
	isZeroDimensional,
} from "./groebner.js";
import { fracm } from "./modular.js";
import { jacobianRankModP } from "./jacobian.js";
import { Poly, canonical } from "./poly.js";
import { countRealClasses } from "./realclasses.js";

export const EDGE_GUARD = 18;

export interface DrawResult {
	dimensionZero: boolean;
	solutions: number | null;
	degree: number | null;
	realClasses: number;
}

export interface FiberReport {
	canonical?: string;
	edges: number;
	draws: number;
	degree: number | "infinite" | null;
	real_classes_observed: number[];
	verdict: "identifiable" | "not-identifiable" | "inconclusive";
	detail: string;
	term_order: string;
}

/** Deterministic numerators in [30, 150] with random signs (xorshift). */
export function drawLambda0(
	graph: FactorGraph,
	seed: number,
): { num: bigint[]; den: bigint; float: number[] } {
	let s = (seed >>> 0) || 0x9e3779b9;
	const next = () => {
		s ^= s << 13;
		s >>>= 0;
		s ^= s >> 17;
		s ^= s << 5;
		s >>>= 0;
		return s / 2 ** 32;
	};
	const num: bigint[] = [];
	const float: number[] = [];
	for (let e = 0; e < graph.edges.length; e++) {
		const k = 30 + Math.floor(next() * 121);
		const sign = next() < 0.5 ? -1 : 1;
		num.push(BigInt(sign * k));
		float.push((sign * k) / 97);
	}
	return { num, den: 97n, float };
}

/**
 * Generators of the fiber ideal at L0: for every observed pair (u, v) with
 * at least one common parent, sum over common parents h of x_{uh} x_{vh}
 * minus the exact rational value of (L0 L0^T)_{uv}, reduced mod p.
 */
export function buildIdeal(graph: FactorGraph, num: bigint[], den: bigint): Poly[] {
	const nvars = graph.edges.length;
	const varOf = new Map<string, number>();
	graph.edges.forEach(([h, v], idx) => varOf.set(`${h},${v}`, idx));
	const p = graph.observed.length;
	const byPair = new Map<string, { terms: [number, number][]; value: bigint }>();
	for (let u = 0; u < p; u++) {
		for (let v = u + 1; v < p; v++) {
			const terms: [number, number][] = [];
			let value = 0n;
			for (let h = 0; h < graph.latent.length; h++) {
				const a = varOf.get(`${h},${u}`);
				const b = varOf.get(`${h},${v}`);
				if (a !== undefined && b !== undefined) {
					terms.push([a, b]);
					value += num[a] * num[b];
				}
			}
			if (terms.length > 0) byPair.set(`${u},${v}`, { terms, value });
		}
	}
	const gens: Poly[] = [];
	for (const { terms, value } of byPair.values()) {
		const poly: Poly = [];
		for (const [a, b] of terms) {
			const mon = new Array(nvars).fill(0);
			mon[a] += 1;
			mon[b] += 1;
			poly.push({ coef: 1, mon });
		}
		const constMon = new Array(nvars).fill(0);
		const c = fracm(-value, den * den);
		if (c !== 0) poly.push({ coef: c, mon: constMon });
		gens.push(canonical(poly));
	}
	return gens;
}

export interface OracleOptions {
	draws?: number;
	timeoutMs?: number;
	realStarts?: number;
	seed?: number;
	/** Override the default edge-count guard (use with care). */
	maxEdges?: number;
}

export function degreeOfSignIdentifiability(
	graph: FactorGraph,
	opts: OracleOptions = {},
): FiberReport {
	const draws = opts.draws ?? 3;
	const seed0 = opts.seed ?? 1;
	const guard = opts.maxEdges ?? EDGE_GUARD;
	if (graph.edges.length > guard) {
		return {
			edges: graph.edges.length,
			draws: 0,
			degree: null,
			real_classes_observed: [],
			verdict: "inconclusive",
			detail: `edge count ${graph.edges.length} above guard ${guard}`,
			term_order: "grevlex",
		};
	}
	const activeColumns = graph.children.filter((c) => c.length > 0).length;
	const orbit = 2 ** activeColumns;
	const results: DrawResult[] = [];
	let timeout = false;
	for (let d = 0; d < draws; d++) {
		const { num, den, float } = drawLambda0(graph, seed0 + 7919 * d);
		let dimensionZero = false;
		let solutions: number | null = null;
		// generic fiber dimension = #vars - Jacobian rank; a deficient rank
		// settles the draw without touching the (potentially huge) basis
		const { rank } = jacobianRankModP(graph, num, den);
		if (rank < graph.edges.length) {
			results.push({ dimensionZero: false, solutions: null, degree: null, realClasses: 0 });
			continue;
		}
		try {
			const basis = groebnerBasis(buildIdeal(graph, num, den), {
				timeoutMs: opts.timeoutMs ?? 120_000,
			});
			dimensionZero = isZeroDimensional(basis, graph.edges.length);
			if (dimensionZero) solutions = countStandardMonomials(basis, graph.edges.length);
		} catch (err) {
			if (err instanceof GroebnerTimeout) {
				timeout = true;
				break;
			}
			throw err;
		}
		let degree: number | null = null;
		if (solutions !== null) {
			degree = solutions % orbit === 0 ? solutions / orbit : null;
		}
		const realClasses =
			dimensionZero && degree !== null && degree >= 2
				? countRealClasses(graph, float, opts.realStarts ?? 200, seed0 + d)
				: dimensionZero && degree === 1
					? 1
					: 0;
		results.push({ dimensionZero, solutions, degree, realClasses });
	}
	if (timeout || results.length === 0) {
		return {
			edges: graph.edges.length,
			draws: results.length,
			degree: null,
			real_classes_observed: results.map((r) => r.realClasses),
			verdict: "inconclusive",
			detail: "groebner timeout",
			term_order: "grevlex",
		};
	}
	const realObserved = results.map((r) => r.realClasses);
	if (results.some((r) => !r.dimensionZero)) {
		const agree = results.filter((r) => !r.dimensionZero).length;
		return {
			edges: graph.edges.length,
			draws: results.length,
			degree: "infinite",
			real_classes_observed: realObserved,
			verdict: agree * 2 >= results.length ? "not-identifiable" : "inconclusive",
			detail: `positive fiber dimension in ${agree}/${results.length} draws`,
			term_order: "grevlex",
		};
	}
	const degrees = results.map((r) => r.degree);
	if (degrees.some((d) => d === null)) {
		return {
			edges: graph.edges.length,
			draws: results.length,
			degree: null,
			real_classes_observed: realObserved,
			verdict: "inconclusive",
			detail: `solution count not divisible by sign-orbit size ${orbit}`,
			term_order: "grevlex",
		};
	}
	const uniq = [...new Set(degrees as number[])];
	if (uniq.length > 1) {
		return {
			edges: graph.edges.length,
			draws: results.length,
			degree: Math.min(...uniq),
			real_classes_observed: realObserved,
			verdict: "inconclusive",
			detail: `degree disagrees across draws: ${degrees.join(",")}`,
			term_order: "grevlex",
		};
	}
	const degree = uniq[0];
	if (degree === 1) {
		return {
			edges: graph.edges.length,
			draws: results.length,
			degree,
			real_classes_observed: realObserved,
			verdict: "identifiable",
			detail: "single sign-orbit class in the complex fiber",
			term_order: "grevlex",
		};
	}
	const multiReal = realObserved.filter((r) => r >= 2).length;
	return {
		edges: graph.edges.length,
		draws: results.length,
		degree,
		real_classes_observed: realObserved,
		verdict: multiReal >= 2 ? "not-identifiable" : "inconclusive",
		detail: `degree ${degree}; draws with >=2 real classes: ${multiReal}`,
		term_order: "grevlex",
	};
}
