/**
 * Arithmetic in the prime field Z/p for a prime below 2^26, so that products
 * of two residues stay exact in double precision (max (p-1)^2 < 2^53).
 */

export const PRIME = 67108859; // largest prime below 2^26

export function mod(a: number): number {
	const r = a % PRIME;
	return r < 0 ? r + PRIME : r;
}

export function addm(a: number, b: number): number {
	const s = a + b;
	return s >= PRIME ? s - PRIME : s;
}

export function subm(a: number, b: number): number {
	const s = a - b;
	return s < 0 ? s + PRIME : s;
}

export function mulm(a: number, b: number): number {
	return (a * b) % PRIME;
}

export function powm(a: number, e: number): number {
	let base = mod(a);
	let acc = 1;
	while (e > 0) {
		if (e & 1) acc = mulm(acc, base);
		base = mulm(base, base);
		e >>>= 1;
	}
	return acc;
}

export function invm(a: number): number {
	if (a % PRIME === 0) throw new Error("division by zero mod p");
	return powm(a, PRIME - 2);
}

/** Reduce an exact fraction num/den (bigints) into the field. */
export function fracm(num: bigint, den: bigint): number {
	const p = BigInt(PRIME);
	let n = num % p;
	if (n < 0n) n += p;
	let d = den % p;
	if (d < 0n) d += p;
	return mulm(Number(n), invm(Number(d)));
}
