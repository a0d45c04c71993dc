"""Event forecasting on synthetic synchrophasor data: simulation, windowing,
PCA reduction, a classifier suite and vote fusion with an entropy confidence index."""

__version__ = "0.1.0"
