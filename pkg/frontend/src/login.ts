// Login and registration. Tokens never touch persistent storage.

import type { App, View } from './app';

export class LoginView implements View {
    private registering = false;

    constructor(private readonly app: App, private readonly parent: HTMLElement) {}

    async mount(): Promise<void> {
        this.render();
    }

    destroy(): void {}

    private field(form: HTMLElement, label: string, type: string, name: string): HTMLInputElement {
        const row = document.createElement('label');
        row.className = 'form-row';
        const caption = document.createElement('span');
        caption.textContent = label;
        const input = document.createElement('input');
        input.type = type;
        input.name = name;
        row.append(caption, input);
        form.appendChild(row);
        return input;
    }

    private render(): void {
        this.parent.textContent = '';
        const h = document.createElement('h1');
        h.textContent = this.registering ? 'Register' : 'Log in';
        const form = document.createElement('form');
        form.className = 'login-form';

        const username = this.field(form, 'Username', 'text', 'username');
        const secret = this.field(form, 'Secret', 'password', 'secret');
        let displayName: HTMLInputElement | null = null;
        let affiliation: HTMLInputElement | null = null;
        if (this.registering) {
            displayName = this.field(form, 'Display name', 'text', 'display_name');
            affiliation = this.field(form, 'Affiliation', 'text', 'affiliation');
        }

        const submit = document.createElement('button');
        submit.type = 'submit';
        submit.textContent = this.registering ? 'Create account' : 'Log in';
        form.appendChild(submit);

        const toggle = document.createElement('button');
        toggle.type = 'button';
        toggle.className = 'link-button';
        toggle.textContent = this.registering
            ? 'Have an account already? Log in'
            : 'New here? Register';
        toggle.addEventListener('click', () => {
            this.registering = !this.registering;
            this.render();
        });

        form.addEventListener('submit', (event) => {
            event.preventDefault();
            this.submit(username.value, secret.value, displayName?.value || '', affiliation?.value || '');
        });

        this.parent.append(h, form, toggle);
    }

    private async submit(username: string, secret: string, displayName: string, affiliation: string): Promise<void> {
        this.app.clearError();
        try {
            if (this.registering) {
                await this.app.api.register(username, secret, displayName, affiliation);
            }
            await this.app.api.login(username, secret);
            await this.app.finishLogin(username);
            window.location.hash = '#/pages';
        } catch (err) {
            this.app.showError(this.registering ? 'Registration failed.' : 'Login failed.', err);
        }
    }
}
