// Session flow: instructions -> one ballot at a time -> completion.
// Submitted answers are final; there is no navigation back to earlier
// ballots. The server decides which ballot is next, so a refresh lands on
// the same pending ballot and the local draft restores its selections.

import { ApiError, StudyApi } from './api.js';
import type { StudyInstructions } from './api.js';
import { BallotDraft } from './state.js';
import {
	renderBallot,
	renderDone,
	renderError,
	renderInstructions,
	renderNotice,
} from './view.js';

export class RaterSession {
	private api: StudyApi;
	private root: HTMLElement;
	private raterId: string;
	private storage: Storage | null;
	private instructions: StudyInstructions | null = null;

	constructor(root: HTMLElement, raterId: string, api: StudyApi, storage: Storage | null = null) {
		this.root = root;
		this.raterId = raterId;
		this.api = api;
		this.storage = storage;
	}

	async start(): Promise<void> {
		try {
			this.instructions = await this.api.getInstructions();
		} catch (error) {
			renderError(this.root, this.describe(error), () => void this.start());
			return;
		}
		renderInstructions(this.root, this.instructions, () => void this.nextBallot());
	}

	async nextBallot(): Promise<void> {
		try {
			const next = await this.api.nextBallot(this.raterId);
			if (!next.ballot) {
				const progress = await this.api.progress(this.raterId);
				renderDone(this.root, progress.rated);
				return;
			}
			const draft = new BallotDraft(next.ballot, this.instructions!.dimensions, this.storage);
			const progress = await this.api.progress(this.raterId);
			renderBallot(
				this.root,
				next.ballot,
				this.instructions!.dimensions,
				`Ballot ${progress.rated + 1} of ${progress.total}`,
				draft,
				{ onSubmit: (d) => void this.submit(d) },
			);
		} catch (error) {
			renderError(this.root, this.describe(error), () => void this.nextBallot());
		}
	}

	async submit(draft: BallotDraft): Promise<void> {
		try {
			const result = await this.api.submitRating(draft.toPayload());
			// an idempotent duplicate means the answers are already safely
			// recorded, so both outcomes advance the session
			if (result.status === 'accepted' || result.status === 'already-recorded') {
				draft.clearStored();
				await this.nextBallot();
			}
		} catch (error) {
			if (error instanceof ApiError && error.code === 'conflicting_resubmission') {
				draft.clearStored();
				renderNotice(this.root,
					'This ballot was already answered from another session; your entries here were not used.');
				await this.nextBallot();
				return;
			}
			renderNotice(this.root, this.describe(error));
		}
	}

	private describe(error: unknown): string {
		if (error instanceof ApiError) return `${error.code}: ${error.message}`;
		return error instanceof Error ? error.message : String(error);
	}
}
