from __future__ import annotations

from pathlib import Path

import streamlit as st

from hyperaccel_engine.core import certify
from hyperaccel_engine.errors import HyperaccelError
from hyperaccel_engine.settings import Settings


def _shipped(settings: Settings):
    return sorted((Path(settings.data_dir) / "certificates").glob("*.cert"))


def render_certify_tab(settings: Settings) -> None:
    st.subheader("WZ certificate check")
    st.caption("Header lines `key: value` (recurrence, variables, term), then `certificate:` and the rational function.")

    shipped = _shipped(settings)
    choice = st.selectbox("Shipped certificate", ["(paste or upload)"] + [p.name for p in shipped])
    text = ""
    if choice != "(paste or upload)":
        text = (Path(settings.data_dir) / "certificates" / choice).read_text(encoding="utf-8")
    upl = st.file_uploader("Upload a certificate file", type=["cert", "txt"])
    if upl is not None:
        text = upl.getvalue().decode("utf-8")
    text = st.text_area("Certificate file", value=text, height=220)

    if not st.button("Check", type="primary", disabled=not text.strip()):
        return
    try:
        report = certify(text=text, seed=settings.seed, settings=settings)
    except HyperaccelError as e:
        st.error(f"{e.__class__.__name__}: {e}")
        return
    if report.valid:
        st.success(f"{report.label}: certificate valid")
    else:
        st.error(f"{report.label}: certificate rejected")
    st.json(report.to_dict(), expanded=True)
