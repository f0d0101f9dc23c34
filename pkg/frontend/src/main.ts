import { StudyApi } from './api.js';
import { RaterSession } from './session.js';

function raterIdFromLocation(): string {
	const params = new URLSearchParams(window.location.search);
	return params.get('rater') ?? '';
}

function boot(): void {
	const root = document.getElementById('app');
	if (!root) throw new Error('missing #app mount point');
	const raterId = raterIdFromLocation();
	if (!raterId) {
		root.textContent = 'Open this page with ?rater=<your rater id>.';
		return;
	}
	const session = new RaterSession(root, raterId, new StudyApi(''), window.localStorage);
	void session.start();
}

boot();
