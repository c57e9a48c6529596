import { describe, expect, it } from "vitest";

import {
	countStandardMonomials,
	groebnerBasis,
	isZeroDimensional,
} from "../src/groebner.js";
import { PRIME, invm, mulm } from "../src/modular.js";
import { Poly, canonical, normalForm } from "../src/poly.js";

function poly(terms: [number, number[]][]): Poly {
	return canonical(terms.map(([coef, mon]) => ({ coef: ((coef % PRIME) + PRIME) % PRIME, mon })));
}

describe("modular arithmetic", () => {
	it("inverts and multiplies", () => {
		for (const a of [1, 2, 97, 12345, PRIME - 1]) {
			expect(mulm(a, invm(a))).toBe(1);
		}
	});
});

describe("groebner bases", () => {
	it("solves a univariate pair of constraints", () => {
		// (x^2 - 1) in one variable: two solutions
		const basis = groebnerBasis([poly([[1, [2]], [-1, [0]]])]);
		expect(isZeroDimensional(basis, 1)).toBe(true);
		expect(countStandardMonomials(basis, 1)).toBe(2);
	});

	it("multiplies solution counts across independent variables", () => {
		const gens = [
			poly([[1, [2, 0]], [-1, [0, 0]]]), // x^2 = 1
			poly([[1, [0, 2]], [-4, [0, 0]]]), // y^2 = 4
		];
		const basis = groebnerBasis(gens);
		expect(isZeroDimensional(basis, 2)).toBe(true);
		expect(countStandardMonomials(basis, 2)).toBe(4);
	});

	it("detects positive-dimensional ideals", () => {
		// xy = 1 defines a curve in the plane
		const basis = groebnerBasis([poly([[1, [1, 1]], [-1, [0, 0]]])]);
		expect(isZeroDimensional(basis, 2)).toBe(false);
	});

	it("reduces to the unit ideal on contradictions", () => {
		const gens = [
			poly([[1, [1]], [-1, [0]]]), // x = 1
			poly([[1, [1]], [-2, [0]]]), // x = 2
		];
		const basis = groebnerBasis(gens);
		expect(countStandardMonomials(basis, 1)).toBe(0);
	});

	it("computes the intersection of a circle and a line", () => {
		// x^2 + y^2 = 5, x + y = 3  ->  two points
		const gens = [
			poly([[1, [2, 0]], [1, [0, 2]], [-5, [0, 0]]]),
			poly([[1, [1, 0]], [1, [0, 1]], [-3, [0, 0]]]),
		];
		const basis = groebnerBasis(gens);
		expect(isZeroDimensional(basis, 2)).toBe(true);
		expect(countStandardMonomials(basis, 2)).toBe(2);
	});

	it("normal form of a basis member vanishes", () => {
		const f = poly([[1, [2, 1]], [3, [1, 0]], [2, [0, 0]]]);
		const g = poly([[1, [1, 1]], [5, [0, 0]]]);
		const basis = groebnerBasis([f, g]);
		for (const member of [f, g]) {
			expect(normalForm(member, basis)).toHaveLength(0);
		}
	});
});
