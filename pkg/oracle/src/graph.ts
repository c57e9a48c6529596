/** Minimal bipartite factor-graph record shared with the decision tool. */

export interface GraphRecord {
	observed: string[];
	latent: string[];
	edges: [string, string][];
}

export interface FactorGraph {
	observed: string[];
	latent: string[];
	/** edge list as (latentIndex, observedIndex) in a fixed order */
	edges: [number, number][];
	/** latentIndex -> observed indices */
	children: number[][];
}

export function fromRecord(rec: GraphRecord): FactorGraph {
	const vIndex = new Map(rec.observed.map((v, i) => [v, i] as const));
	const hIndex = new Map(rec.latent.map((h, i) => [h, i] as const));
	const children: number[][] = rec.latent.map(() => []);
	const edges: [number, number][] = [];
	for (const [h, v] of rec.edges) {
		const hi = hIndex.get(h);
		const vi = vIndex.get(v);
		if (hi === undefined || vi === undefined) {
			throw new Error(`edge (${h}, ${v}) references unknown nodes`);
		}
		edges.push([hi, vi]);
		children[hi].push(vi);
	}
	return { observed: rec.observed, latent: rec.latent, edges, children };
}

export function parseGraphJson(text: string): FactorGraph {
	return fromRecord(JSON.parse(text) as GraphRecord);
}
