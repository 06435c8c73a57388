import os
import sys
import traceback

import streamlit as st

# Streamlit does not always put the repo root on sys.path.
REPO_ROOT = os.path.dirname(os.path.abspath(__file__))
if REPO_ROOT not in sys.path:
    sys.path.insert(0, REPO_ROOT)

try:
    from hyperaccel_engine.core import catalogs_for
    from hyperaccel_engine.settings import Settings
except Exception as e:
    st.error("Boot failed: could not import hyperaccel_engine")
    st.code("\n".join(sys.path), language="text")
    st.exception(e)
    st.code(traceback.format_exc(), language="text")
    st.stop()

try:
    from hyperaccel_ui.catalog_ui import render_catalog_tab
    from hyperaccel_ui.accelerate_ui import render_accelerate_tab
    from hyperaccel_ui.certify_ui import render_certify_tab
    from hyperaccel_ui.diagnostics import render_diagnostics_tab
except Exception as e:
    st.error("Boot failed: could not import UI modules")
    st.exception(e)
    st.code(traceback.format_exc(), language="text")
    st.stop()


def sidebar_settings() -> Settings:
    base = Settings.from_env()
    with st.sidebar:
        st.header("Settings")
        seed = st.number_input("Seed", min_value=0, value=base.seed, step=1)
        term_cap = st.number_input("Term cap", min_value=100, value=base.term_cap, step=1000)
        jobs = st.number_input("Parallel jobs", min_value=1, max_value=os.cpu_count() or 1, value=min(base.jobs, os.cpu_count() or 1))
    return base.with_overrides(seed=int(seed), term_cap=int(term_cap), jobs=int(jobs))


def main():
    st.set_page_config(page_title="Hypergeometric Series Accelerator", layout="wide")
    st.title("Hypergeometric Series Accelerator")
    settings = sidebar_settings()

    try:
        catalogs_for(settings.data_dir)
    except Exception as e:
        st.error("Boot failed: catalog files did not validate")
        st.exception(e)
        st.stop()

    tabs = st.tabs(["Catalog", "Accelerate", "Certify", "Diagnostics"])
    with tabs[0]:
        render_catalog_tab(settings)
    with tabs[1]:
        render_accelerate_tab(settings)
    with tabs[2]:
        render_certify_tab(settings)
    with tabs[3]:
        render_diagnostics_tab(settings)


if __name__ == "__main__":
    main()
