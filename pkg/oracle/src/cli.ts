/**
 * Oracle command line.
 *
 * Single graph:   node dist/cli.js --graph g.json [--draws 3] [--max-edges N]
 * Census stream:  node dist/cli.js --census census.jsonl --out fibers.jsonl
 *                 [--summary summary.json] [--no-isolate] [--timeout 120]
 *
 * The census input is the JSONL stream produced by the decision tool
 * (`idfactor enumerate --stream`); each row's canonical key is echoed into
 * the FiberReport so reports join on it.  In isolated mode every graph is
 * processed in its own child process with a wall-clock timeout; timeouts
 * degrade to an inconclusive verdict.
 */

import { spawnSync } from "node:child_process";
import { readFileSync, writeFileSync } from "node:fs";
import { fileURLToPath } from "node:url";

import { FiberReport, degreeOfSignIdentifiability } from "./fiber.js";
import { fromRecord, parseGraphJson } from "./graph.js";
import { CensusRow, summarize } from "./summary.js";

function parseArgs(argv: string[]): Map<string, string | boolean> {
	const out = new Map<string, string | boolean>();
	for (let i = 0; i < argv.length; i++) {
		const a = argv[i];
		if (!a.startsWith("--")) continue;
		const key = a.slice(2);
		if (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
			out.set(key, argv[++i]);
		} else {
			out.set(key, true);
		}
	}
	return out;
}

function runSingle(
	graphJson: string,
	draws: number,
	timeoutMs: number,
	maxEdges?: number,
): FiberReport {
	const graph = parseGraphJson(graphJson);
	return degreeOfSignIdentifiability(graph, { draws, timeoutMs, maxEdges });
}

function runIsolated(row: CensusRow, draws: number, timeoutSec: number): FiberReport {
	const payload = JSON.stringify({
		observed: row.observed,
		latent: row.latent,
		edges: row.edges,
	});
	const self = fileURLToPath(import.meta.url);
	const res = spawnSync(
		process.execPath,
		[self, "--single", "--draws", String(draws), "--timeout", String(timeoutSec)],
		{ input: payload, encoding: "utf8", timeout: timeoutSec * 1000 + 10_000 },
	);
	if (res.status === 0 && res.stdout) {
		return JSON.parse(res.stdout) as FiberReport;
	}
	return {
		edges: row.edge_count,
		draws: 0,
		degree: null,
		real_classes_observed: [],
		verdict: "inconclusive",
		detail: `isolated run failed: ${res.signal ?? res.status}`,
		term_order: "grevlex",
	};
}

function main(): number {
	const args = parseArgs(process.argv.slice(2));
	const draws = Number(args.get("draws") ?? 3);
	const timeoutSec = Number(args.get("timeout") ?? 120);
	const maxEdges = args.has("max-edges") ? Number(args.get("max-edges")) : undefined;

	if (args.get("single")) {
		const text = readFileSync(0, "utf8");
		const report = runSingle(text, draws, timeoutSec * 1000, maxEdges);
		process.stdout.write(JSON.stringify(report) + "\n");
		return 0;
	}
	if (args.has("graph")) {
		const text = readFileSync(String(args.get("graph")), "utf8");
		const report = runSingle(text, draws, timeoutSec * 1000, maxEdges);
		process.stdout.write(JSON.stringify(report, null, 2) + "\n");
		if (report.verdict === "inconclusive" && report.detail.includes("guard")) {
			return 3; // capacity guard
		}
		return 0;
	}
	if (args.has("census")) {
		const lines = readFileSync(String(args.get("census")), "utf8")
			.split("\n")
			.filter((l) => l.trim());
		const rows = lines.map((l) => JSON.parse(l) as CensusRow);
		const isolate = !args.get("no-isolate");
		const reports: FiberReport[] = [];
		const outPath = args.get("out") ? String(args.get("out")) : null;
		const chunks: string[] = [];
		const t0 = Date.now();
		rows.forEach((row, i) => {
			const rep = isolate
				? runIsolated(row, draws, timeoutSec)
				: degreeOfSignIdentifiability(fromRecord(row), {
						draws,
						timeoutMs: timeoutSec * 1000,
						maxEdges,
					});
			rep.canonical = row.canonical;
			reports.push(rep);
			chunks.push(JSON.stringify(rep));
			if ((i + 1) % 50 === 0) {
				process.stderr.write(
					`processed ${i + 1}/${rows.length} (${Math.round((Date.now() - t0) / 1000)}s)\n`,
				);
			}
		});
		if (outPath) writeFileSync(outPath, chunks.join("\n") + "\n");
		const summary = summarize(rows, reports);
		const summaryPath = args.get("summary") ? String(args.get("summary")) : null;
		const text = JSON.stringify(summary, null, 2) + "\n";
		if (summaryPath) writeFileSync(summaryPath, text);
		else process.stdout.write(text);
		return 0;
	}
	process.stderr.write(
		"usage: cli --graph g.json | --census stream.jsonl [--out fibers.jsonl] " +
			"[--summary s.json] [--draws N] [--timeout SEC] [--max-edges N] [--no-isolate]\n",
	);
	return 2;
}

process.exit(main());
