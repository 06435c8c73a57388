from __future__ import annotations

import pandas as pd
import streamlit as st

from hyperaccel_engine.core import accelerate, catalogs_for
from hyperaccel_engine.errors import HyperaccelError
from hyperaccel_engine.exact import as_rational
from hyperaccel_engine.explain import recurrence_text, run_ledger, run_summary
from hyperaccel_engine.settings import Settings

from .charts import digits_chart


def render_accelerate_tab(settings: Settings) -> None:
    st.subheader("Accelerate a family instance")
    recurrences, _, _ = catalogs_for(settings.data_dir)
    ids = [rid for rid in recurrences.ids() if recurrences.get(rid).iterable]

    c1, c2 = st.columns([2, 3])
    with c1:
        picked = st.multiselect("Recurrence chain (applied in order)", ids, default=["T3M1_Y2"])
        chain = "+".join(picked)
        x = st.text_input("x", value="1/2")
        y = st.text_input("y", value="2")
        steps = st.slider("Steps", min_value=1, max_value=60, value=12)
        repeat = st.number_input("Repeat chain", min_value=1, max_value=5, value=1)
        digits = st.number_input("Digits for the accelerated value", min_value=5, max_value=200, value=40)
        check = st.checkbox("Check the remainder numerically", value=True)
    with c2:
        for rid in picked:
            st.code(recurrence_text(recurrences.get(rid)), language="text")

    if not st.button("Run", type="primary", disabled=not picked):
        return
    try:
        run = accelerate(
            chain,
            as_rational(x),
            as_rational(y),
            int(steps),
            int(repeat),
            digits=int(digits),
            check_remainder=check,
            settings=settings,
        )
    except HyperaccelError as e:
        st.error(f"{e.__class__.__name__}: {e}")
        return

    st.session_state["last_run"] = run
    st.json(run_summary(run), expanded=True)
    if run.matched_identity:
        st.success(f"Matches catalog identity {run.matched_identity}")
    st.dataframe(pd.DataFrame(run_ledger(run)), width="stretch", hide_index=True)
    if run.digits_by_step:
        st.pyplot(digits_chart(run.digits_by_step))
