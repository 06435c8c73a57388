from __future__ import annotations

from typing import Any, Dict, List

import pandas as pd
import streamlit as st

from hyperaccel_engine.core import catalogs_for, export, verify_all
from hyperaccel_engine.explain import report_rows, verification_summary
from hyperaccel_engine.library import format_constant
from hyperaccel_engine.settings import Settings


def _catalog_rows(identities) -> List[Dict[str, Any]]:
    rows = []
    for r in identities.records.values():
        rows.append({
            "id": r.id,
            "constant": format_constant({k: str(v) for k, v in r.constant.items()}),
            "claimed_rate": None if r.claimed_rate is None else str(r.claimed_rate),
            "status": r.status,
            "route": None if r.route is None else f"{r.route.recurrence} @ ({r.route.x}, {r.route.y})"
            + (f" x{r.route.repeat}" if r.route.repeat != 1 else ""),
            "anchor": r.anchor,
        })
    return rows


def render_catalog_tab(settings: Settings) -> None:
    st.subheader("Identity catalog")
    st.caption("Every series = constant record with its provenance. Verification sums each series with a certified tail bound.")
    _, identities, store = catalogs_for(settings.data_dir)
    st.info(f"Active catalog hash: {identities.library_hash}  |  reference store hash: {store.library_hash}")

    df = pd.DataFrame(_catalog_rows(identities))
    status = st.radio("Show", ["all", "proved", "conjectured"], horizontal=True)
    if status != "all":
        df = df[df["status"] == status]
    st.dataframe(df, width="stretch", hide_index=True)

    c1, c2, c3 = st.columns([2, 1, 1])
    with c1:
        selected = st.multiselect("Identities to verify", list(df["id"]))
    with c2:
        digits = st.number_input("Digits", min_value=5, max_value=110, value=50, step=5)
    with c3:
        st.write("")
        st.write("")
        run_all = st.button("Verify all")

    if st.button("Verify selected", type="primary", disabled=not selected):
        with st.spinner("Verifying..."):
            st.session_state["last_reports"] = verify_all(selected, int(digits), settings)
    if run_all:
        with st.spinner("Verifying the whole catalog..."):
            st.session_state["last_reports"] = verify_all(None, int(digits), settings)

    reports = st.session_state.get("last_reports")
    if reports:
        st.subheader("Verification")
        st.write(verification_summary(reports))
        st.dataframe(report_rows(reports), width="stretch", hide_index=True)

    st.divider()
    fmt = st.radio("Export format", ["json", "csv"], horizontal=True)
    if st.button("Prepare export"):
        with st.spinner("Measuring rates..."):
            st.session_state["export_text"] = (fmt, export(fmt, None, reports, settings))
    prepared = st.session_state.get("export_text")
    if prepared:
        kind, text = prepared
        st.download_button(
            f"Download catalog {kind.upper()}",
            data=text,
            file_name=f"identities_export.{kind}",
            mime="application/json" if kind == "json" else "text/csv",
        )
