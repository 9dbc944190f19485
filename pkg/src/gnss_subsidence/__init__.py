"""
Land subsidence and upheave prediction from GNSS station position series.

The pipeline removes tidal and atmospheric periodic signals, rotates the
positions into the local astronomical frame using deflections of the
vertical from a gravity field model, forecasts the vertical coordinate with
windowed regression models or the Theta method, and scores the forecasts
with MASE, MAE and RMSE.
"""

__version__ = "0.1.0"
