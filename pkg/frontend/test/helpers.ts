import type {
	BallotPayload,
	DimensionInfo,
	NextBallotResponse,
	StudyInstructions,
} from '../src/api.js';

export const DIMENSIONS: DimensionInfo[] = [
	{
		id: 'is_customer_need',
		short_name: 'Is a customer need typically identified in a VOC study',
		instruction:
			'Please indicate whether the statement qualifies as a customer need identified ' +
			'in a typical VOC study. Customer needs capture conceptual benefits that ' +
			'customers want to obtain from a product, which is different from ' +
			'customer-provided technical specifications and desired solutions.',
	},
	{
		id: 'sufficiently_specific',
		short_name: 'Captures sufficient detail about a customer need',
		instruction:
			'Please evaluate whether or not the statement is actionable and not too general.',
	},
	{
		id: 'follows_from_review',
		short_name: 'Is based on some information in the review',
		instruction:
			'Please evaluate whether or not the statement is based on information in the review.',
	},
];

export const INSTRUCTIONS: StudyInstructions = {
	study_id: 'unit-study',
	general_comment: 'Answer all questions.',
	dimensions: DIMENSIONS,
};

export function ballotFixture(n = 0): BallotPayload {
	return {
		ballot_id: `unit-study:r1:v${n}`,
		rater_id: 'r1',
		review_text: `The stain went on easily and dried overnight (${n}).`,
		statements: [
			{ slot: 0, text: 'Able to apply the stain without streaks' },
			{ slot: 1, text: 'Confident the color will match the sample' },
			{ slot: 2, text: 'Able to finish the job in one day' },
		],
	};
}

export interface FakeServer {
	fetch: typeof fetch;
	submitted: unknown[];
	rated: Set<string>;
}

/** In-memory study service: serves `count` ballots per rater in order. */
export function fakeServer(count: number, opts: {
	conflictOn?: string;
	duplicateOn?: string;
} = {}): FakeServer {
	const submitted: unknown[] = [];
	const rated = new Set<string>();

	const handler = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
		const url = typeof input === 'string' ? input : input.toString();
		const respond = (status: number, body: unknown) =>
			new Response(JSON.stringify(body), {
				status, headers: { 'Content-Type': 'application/json' },
			});

		if (url.endsWith('/api/study')) {
			return respond(200, INSTRUCTIONS);
		}
		if (url.includes('/next-ballot')) {
			const pending = [];
			for (let i = 0; i < count; i++) {
				if (!rated.has(ballotFixture(i).ballot_id)) pending.push(i);
			}
			const body: NextBallotResponse = {
				ballot: pending.length ? ballotFixture(pending[0]) : null,
				remaining: pending.length,
			};
			return respond(200, body);
		}
		if (url.includes('/progress')) {
			return respond(200, { rater_id: 'r1', rated: rated.size, total: count });
		}
		if (url.endsWith('/api/ratings')) {
			const payload = JSON.parse(String(init?.body));
			submitted.push(payload);
			if (opts.conflictOn === payload.ballot_id) {
				return respond(409, {
					code: 'conflicting_resubmission',
					message: 'already recorded with different answers',
				});
			}
			if (opts.duplicateOn === payload.ballot_id && rated.has(payload.ballot_id)) {
				return respond(200, { status: 'already-recorded' });
			}
			rated.add(payload.ballot_id);
			return respond(200, { status: 'accepted' });
		}
		return respond(404, { code: 'not_found', message: url });
	};

	return { fetch: handler as typeof fetch, submitted, rated };
}

export function clickRadio(root: HTMLElement, slot: number, dimension: string, value: 'yes' | 'no'): void {
	const selector = `input[name="answer-${slot}-${dimension}"][value="${value}"]`;
	const radio = root.querySelector<HTMLInputElement>(selector);
	if (!radio) throw new Error(`no radio for ${selector}`);
	radio.checked = true;
	radio.dispatchEvent(new Event('change'));
}

export async function waitFor(predicate: () => boolean, timeoutMs = 5000): Promise<void> {
	const started = Date.now();
	while (!predicate()) {
		if (Date.now() - started > timeoutMs) throw new Error('waitFor timed out');
		await new Promise((resolve) => setTimeout(resolve, 10));
	}
}
