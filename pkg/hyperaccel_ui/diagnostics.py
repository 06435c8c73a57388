import importlib

import streamlit as st

from hyperaccel_engine.core import catalogs_for
from hyperaccel_engine.settings import Settings

CHECKS = [
    ("hyperaccel_ui.catalog_ui", "render_catalog_tab"),
    ("hyperaccel_ui.accelerate_ui", "render_accelerate_tab"),
    ("hyperaccel_ui.certify_ui", "render_certify_tab"),
    ("hyperaccel_engine.core", "accelerate"),
    ("hyperaccel_engine.core", "verify_identity"),
    ("hyperaccel_engine.wz", "check_certificate"),
]


def render_diagnostics_tab(settings: Settings):
    st.subheader("Import resolution report")
    rows = []
    for mod, attr in CHECKS:
        try:
            m = importlib.import_module(mod)
            ok = hasattr(m, attr)
            rows.append({"module": mod, "attr": attr, "status": "OK" if ok else "MISSING_ATTR"})
        except Exception as e:
            rows.append({"module": mod, "attr": attr, "status": f"IMPORT_FAIL: {e.__class__.__name__}: {e}"})
    st.dataframe(rows, width="stretch", hide_index=True)

    st.subheader("Data files")
    try:
        recurrences, identities, store = catalogs_for(settings.data_dir)
    except Exception as e:
        st.error(f"Catalog load failed: {e.__class__.__name__}: {e}")
        return
    st.dataframe([
        {"catalog": "recurrences", "entries": len(recurrences.entries), "hash": recurrences.library_hash},
        {"catalog": "identities", "entries": len(identities.records), "hash": identities.library_hash},
        {"catalog": "reference constants", "entries": len(store.constants), "hash": store.library_hash},
    ], width="stretch", hide_index=True)

    st.subheader("Reference store")
    st.dataframe([
        {"name": c.name, "places": store.places(c.name), "prefix": store.reference(c.name, 30), "oracle": c.oracle_note}
        for c in store.constants.values()
    ], width="stretch", hide_index=True)

    st.subheader("Settings")
    st.json(settings.to_dict(), expanded=False)

    run = st.session_state.get("last_run")
    if run is not None:
        st.subheader("Last acceleration run")
        st.json({k: v for k, v in run.to_dict().items() if k not in ("terms", "partial_sums")}, expanded=False)
