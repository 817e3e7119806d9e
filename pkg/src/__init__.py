# Qubit-controller thermal-stability twin
