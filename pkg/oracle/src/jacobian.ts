/**
 * Exact rank of the off-diagonal parametrization's Jacobian at a rational
 * point, computed in the prime field.  The generic fiber dimension equals
 * (number of edge variables) minus the generic Jacobian rank, so full rank
 * certifies a finite fiber before any Groebner computation; a deficient
 * rank mod p over several independent draws indicates a positive-dimensional
 * fiber (rank mod p never exceeds the rational rank).
 */

import { FactorGraph } from "./graph.js";
import { fracm, mulm, subm, invm, addm } from "./modular.js";

/** Jacobian rows indexed by observed pairs with common parents. */
export function jacobianRankModP(graph: FactorGraph, num: bigint[], den: bigint): {
	rank: number;
	rows: number;
} {
	const nvars = graph.edges.length;
	const varOf = new Map<string, number>();
	graph.edges.forEach(([h, v], idx) => varOf.set(`${h},${v}`, idx));
	const lam = num.map((n) => fracm(n, den));
	const p = graph.observed.length;
	const rows: number[][] = [];
	for (let u = 0; u < p; u++) {
		for (let v = u + 1; v < p; v++) {
			let touched = false;
			const row = new Array(nvars).fill(0);
			for (let h = 0; h < graph.latent.length; h++) {
				const a = varOf.get(`${h},${u}`);
				const b = varOf.get(`${h},${v}`);
				if (a !== undefined && b !== undefined) {
					row[a] = addm(row[a], lam[b]);
					row[b] = addm(row[b], lam[a]);
					touched = true;
				}
			}
			if (touched) rows.push(row);
		}
	}
	// Gaussian elimination over GF(p)
	let rank = 0;
	let col = 0;
	const m = rows.length;
	while (rank < m && col < nvars) {
		let piv = -1;
		for (let r = rank; r < m; r++) {
			if (rows[r][col] !== 0) {
				piv = r;
				break;
			}
		}
		if (piv < 0) {
			col++;
			continue;
		}
		[rows[rank], rows[piv]] = [rows[piv], rows[rank]];
		const inv = invm(rows[rank][col]);
		for (let c = col; c < nvars; c++) rows[rank][c] = mulm(rows[rank][c], inv);
		for (let r = 0; r < m; r++) {
			if (r === rank || rows[r][col] === 0) continue;
			const f = rows[r][col];
			for (let c = col; c < nvars; c++) {
				rows[r][c] = subm(rows[r][c], mulm(f, rows[rank][c]));
			}
		}
		rank++;
		col++;
	}
	return { rank, rows: m };
}
