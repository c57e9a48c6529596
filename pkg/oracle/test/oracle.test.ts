import { execFileSync } from "node:child_process";
import { existsSync, readFileSync } from "node:fs";
import { join } from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import { degreeOfSignIdentifiability } from "../src/fiber.js";
import { jacobianRankModP } from "../src/jacobian.js";
import { drawLambda0 } from "../src/fiber.js";
import { FactorGraph, fromRecord, parseGraphJson } from "../src/graph.js";
import { summarize } from "../src/summary.js";

const FIXTURES = join(__dirname, "..", "..", "src", "idfactor", "fixtures");

function loadFixture(name: string): FactorGraph {
	return parseGraphJson(readFileSync(join(FIXTURES, `${name}.json`), "utf8"));
}

describe("degree of sign-identifiability on the bundled graphs", () => {
	it.each([
		["intro_overlap"],
		["ar_identifiable"],
		["full_staircase_5_2"],
		["matching_demo"],
	])("%s has a single sign-orbit class", (name) => {
		const rep = degreeOfSignIdentifiability(loadFixture(name), { draws: 3 });
		expect(rep.degree).toBe(1);
		expect(rep.verdict).toBe("identifiable");
	});

	it("certifies the two graphs beyond the edge guard with it raised", () => {
		for (const name of ["two_block_overlap", "staircase_with_tail"]) {
			const rep = degreeOfSignIdentifiability(loadFixture(name), {
				draws: 2,
				maxEdges: 40,
				timeoutMs: 300_000,
			});
			expect(rep.degree).toBe(1);
			expect(rep.verdict).toBe("identifiable");
		}
	});

	it("finds two sign-orbit classes at the parameter-count boundary", () => {
		const rep = degreeOfSignIdentifiability(loadFixture("full_staircase_6_3"), {
			draws: 3,
		});
		expect(rep.degree).toBe(2);
		expect(rep.verdict).not.toBe("identifiable");
	});

	it("marks the undercounted cousin graphs identifiable", () => {
		for (const name of ["algebraic_gap_a", "algebraic_gap_b"]) {
			const rep = degreeOfSignIdentifiability(loadFixture(name), { draws: 3 });
			expect(rep.degree).toBe(1);
			expect(rep.verdict).toBe("identifiable");
		}
	});

	it("respects the edge-count guard by default", () => {
		const rep = degreeOfSignIdentifiability(loadFixture("staircase_with_tail"));
		expect(rep.verdict).toBe("inconclusive");
		expect(rep.detail).toContain("guard");
	});

	it("reports draws deterministically", () => {
		const a = degreeOfSignIdentifiability(loadFixture("harman5"), { draws: 2 });
		const b = degreeOfSignIdentifiability(loadFixture("harman5"), { draws: 2 });
		expect(a).toEqual(b);
	});
});

describe("jacobian rank prefilter", () => {
	it("full rank on an identifiable graph, deficient on a rank-deficient one", () => {
		const good = loadFixture("harman5");
		const dg = drawLambda0(good, 1);
		expect(jacobianRankModP(good, dg.num, dg.den).rank).toBe(good.edges.length);

		// two latent columns with identical support leave a rotation freedom
		const bad = fromRecord({
			observed: ["v1", "v2", "v3", "v4"],
			latent: ["h1", "h2"],
			edges: [
				["h1", "v1"], ["h1", "v2"], ["h1", "v3"], ["h1", "v4"],
				["h2", "v1"], ["h2", "v2"], ["h2", "v3"], ["h2", "v4"],
			],
		});
		const db = drawLambda0(bad, 1);
		expect(jacobianRankModP(bad, db.num, db.den).rank).toBeLessThan(bad.edges.length);
	});
});

describe("census cross-validation", () => {
	const censusPath = "/tmp/oracle_census73.jsonl";
	let rows: any[] = [];
	let reports: any[] = [];

	beforeAll(() => {
		if (!existsSync(censusPath)) {
			execFileSync(
				"python3",
				["-m", "idfactor.cli", "enumerate", "--max-observed", "7",
				 "--max-latent", "3", "--stream", "--out", censusPath],
				{ cwd: join(__dirname, "..", ".."), stdio: "inherit" },
			);
		}
		rows = readFileSync(censusPath, "utf8")
			.split("\n")
			.filter(Boolean)
			.map((l) => JSON.parse(l));
		reports = rows.map((row) =>
			degreeOfSignIdentifiability(fromRecord(row), { draws: 3 }),
		);
	}, 600_000);

	it("reproduces the published identifiable totals and the exact gap", () => {
		const summary = summarize(rows, reports);
		expect(summary.classes).toBe(733);
		expect(summary.zuta_classes).toBe(562);
		expect(summary.gen_sign_id_total_zuta).toBe(174);
		const zutaGap = summary.identifiable_not_ext_m.filter(
			(c) => rows.find((r) => r.canonical === c)?.zuta,
		);
		expect(zutaGap).toHaveLength(2);
		expect(summary.soundness_violations).toHaveLength(0);
	}, 600_000);

	it("per-edge-count identifiable counts match the published census", () => {
		const expected: Record<number, number> = {
			1: 0, 2: 0, 3: 1, 4: 1, 5: 1, 6: 3, 7: 4, 8: 6, 9: 8, 10: 11,
			11: 23, 12: 31, 13: 33, 14: 23, 15: 16, 16: 8, 17: 4, 18: 1,
		};
		const summary = summarize(rows, reports);
		for (const [edges, want] of Object.entries(expected)) {
			const got = summary.gen_sign_id_rows[edges]?.gen_sign_id ?? 0;
			expect(got, `edge count ${edges}`).toBe(want);
		}
	}, 600_000);
});
