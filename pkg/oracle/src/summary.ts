/**
 * Census join: aggregate oracle verdicts against the decision tool's census
 * stream, keyed on canonical forms.
 */

import { FiberReport } from "./fiber.js";

export interface CensusRow {
	id: number;
	canonical: string;
	observed: string[];
	latent: string[];
	edges: [string, string][];
	edge_count: number;
	zuta: boolean;
	ar: boolean;
	m: boolean;
	ext_m: boolean;
}

export interface CensusSummary {
	classes: number;
	zuta_classes: number;
	gen_sign_id_total_zuta: number;
	gen_sign_id_rows: Record<string, { zuta: number; gen_sign_id: number }>;
	identifiable_not_ext_m: string[];
	soundness_violations: string[];
	inconclusive: number;
}

export function summarize(rows: CensusRow[], reports: FiberReport[]): CensusSummary {
	const byEdges: Record<string, { zuta: number; gen_sign_id: number }> = {};
	let total = 0;
	let zutaTotal = 0;
	let inconclusive = 0;
	const gap: string[] = [];
	const violations: string[] = [];
	rows.forEach((row, i) => {
		const rep = reports[i];
		total++;
		const identifiable = rep.verdict === "identifiable";
		if (rep.verdict === "inconclusive") inconclusive++;
		if (row.zuta) {
			const slot = (byEdges[row.edge_count] ??= { zuta: 0, gen_sign_id: 0 });
			slot.zuta++;
			if (identifiable) {
				slot.gen_sign_id++;
				zutaTotal++;
			}
		}
		if (identifiable && !row.ext_m) gap.push(row.canonical);
		if (row.ext_m && rep.verdict === "not-identifiable") violations.push(row.canonical);
	});
	return {
		classes: total,
		zuta_classes: rows.filter((r) => r.zuta).length,
		gen_sign_id_total_zuta: zutaTotal,
		gen_sign_id_rows: byEdges,
		identifiable_not_ext_m: gap,
		soundness_violations: violations,
		inconclusive,
	};
}
