"""
Fuzzy entropy as a chaos sensor
===============================

Window interval series from regular and chaotic settings, label each window
with its fuzzy entropy, and summarise how well the entropy separates the two
regimes for several window lengths.
"""

from chaos_sensor import (
    CHAOTIC_R,
    REGULAR_R,
    FuzzyEnParams,
    fuzzy_entropy,
    length_study,
    sensor_characteristics,
    sfu_predictor,
)
from chaos_sensor.evaluation import regime_windows, write_characteristics_csv, write_length_study_csv

# %%
# One window from each regime
fe = FuzzyEnParams()
regular = regime_windows(REGULAR_R[0])[0]
chaotic = regime_windows(CHAOTIC_R[0])[0]
print("regular window entropy:", round(fuzzy_entropy(regular, fe), 3))
print("chaotic window entropy:", round(fuzzy_entropy(chaotic, fe), 3))

# %%
# Sensor figures of merit at NL = 50 over all ten reference series
sfu = sensor_characteristics(sfu_predictor(fe))
print(sfu)
write_characteristics_csv({"SFU": sfu}, "sfu_characteristics.csv")

# %%
# Short windows are noisy; past about 50 values the chaotic mean levels off
rows = length_study([10, 20, 30, 50, 70, 100])
for row in rows:
    print(f"NL={row.nl:3d}  chaos={row.en_av_chaos:.3f}  order={row.en_av_order:.3f}  "
          f"EnErr={row.en_err:5.1f}%")
write_length_study_csv(rows, "length_study.csv")
