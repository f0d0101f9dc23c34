// Answer drafting for one ballot. Drafts persist to localStorage so a
// mid-ballot refresh restores every selection; they are cleared once the
// server records the rating.

import type { AnswerCell, BallotPayload, DimensionInfo, RatingPayload } from './api.js';

export type AnswerMap = Record<string, 'yes' | 'no'>;

export function cellKey(slot: number, dimension: string): string {
	return `${slot}|${dimension}`;
}

function draftStorageKey(ballotId: string): string {
	return `voc-draft:${ballotId}`;
}

export class BallotDraft {
	readonly ballot: BallotPayload;
	readonly dimensions: DimensionInfo[];
	private answers: AnswerMap = {};
	private storage: Storage | null;

	constructor(ballot: BallotPayload, dimensions: DimensionInfo[], storage: Storage | null = null) {
		this.ballot = ballot;
		this.dimensions = dimensions;
		this.storage = storage;
		this.restore();
	}

	private restore(): void {
		if (!this.storage) return;
		const raw = this.storage.getItem(draftStorageKey(this.ballot.ballot_id));
		if (!raw) return;
		try {
			const parsed = JSON.parse(raw) as AnswerMap;
			for (const [key, value] of Object.entries(parsed)) {
				if (value === 'yes' || value === 'no') this.answers[key] = value;
			}
		} catch {
			this.storage.removeItem(draftStorageKey(this.ballot.ballot_id));
		}
	}

	answer(slot: number, dimension: string, value: 'yes' | 'no'): void {
		this.answers[cellKey(slot, dimension)] = value;
		this.storage?.setItem(
			draftStorageKey(this.ballot.ballot_id), JSON.stringify(this.answers));
	}

	valueFor(slot: number, dimension: string): 'yes' | 'no' | undefined {
		return this.answers[cellKey(slot, dimension)];
	}

	missingCells(): Array<[number, string]> {
		const missing: Array<[number, string]> = [];
		for (const statement of this.ballot.statements) {
			for (const dim of this.dimensions) {
				if (!this.answers[cellKey(statement.slot, dim.id)]) {
					missing.push([statement.slot, dim.id]);
				}
			}
		}
		return missing;
	}

	complete(): boolean {
		return this.missingCells().length === 0;
	}

	toPayload(): RatingPayload {
		const answers: AnswerCell[] = [];
		for (const statement of this.ballot.statements) {
			for (const dim of this.dimensions) {
				const value = this.answers[cellKey(statement.slot, dim.id)];
				if (!value) throw new Error(`unanswered cell ${statement.slot}/${dim.id}`);
				answers.push({ slot: statement.slot, dimension: dim.id, answer: value });
			}
		}
		return {
			ballot_id: this.ballot.ballot_id,
			rater_id: this.ballot.rater_id,
			answers,
			submitted_at: new Date().toISOString(),
		};
	}

	clearStored(): void {
		this.storage?.removeItem(draftStorageKey(this.ballot.ballot_id));
	}
}
