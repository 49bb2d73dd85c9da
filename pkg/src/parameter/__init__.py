"""Parameter-plane computations: conformal coordinates, rays, cusps, holes and components"""
