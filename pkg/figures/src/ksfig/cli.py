"""Command line: one figure per invocation from persisted artifacts."""

from __future__ import annotations

import click

from . import plots, readers


@click.group()
def main():
    """Static figures from solver artifacts."""


@main.command()
@click.option("--kind", type=click.Choice(["profile", "spectra", "decay",
                                           "epsconv"]), required=True)
@click.option("--input", "input_path", type=click.Path(exists=True),
              required=True, help="Primary CSV artifact.")
@click.option("--envelopes", "env_path", type=click.Path(exists=True),
              default=None, help="Envelope CSV (profile figures).")
@click.option("--fit", "fit_path", type=click.Path(exists=True), default=None,
              help="Decay-fit JSON (decay figures).")
@click.option("--out", "out_path", type=click.Path(), required=True)
def plot(kind, input_path, env_path, fit_path, out_path):
    """Render one figure; exits nonzero on schema mismatch."""
    try:
        if kind == "profile":
            meta, data = readers.read_table(input_path, "profile")
            env = readers.read_table(env_path, "envelopes") if env_path else None
            fig = plots.profile_figure(meta, data, envelopes=env)
        elif kind == "spectra":
            meta, data = readers.read_table(input_path, "spectra")
            fig = plots.spectra_figure(meta, data)
        elif kind == "decay":
            meta, data = readers.read_table(input_path, "trajectory")
            fit = readers.read_decay_fit(fit_path) if fit_path else None
            fig = plots.decay_figure(meta, data, fit=fit)
        else:
            meta, data = readers.read_table(input_path, "epsconv")
            fig = plots.epsconv_figure(meta, data)
    except readers.SchemaError as e:
        raise click.ClickException(str(e)) from e
    plots.save(fig, out_path)
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
