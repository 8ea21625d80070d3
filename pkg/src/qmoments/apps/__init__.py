"""Application studies: eigenvalue intervals, virtual cooling and Renyi entropy."""
